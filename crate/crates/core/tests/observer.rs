use modal_codesign::benchplant::{mmpa_lite_spec, two_mass_spec};
use modal_codesign::observer::{
    build_error_observer, build_output_observer, error_observer_gain, flexible_subsystem,
    output_observer_gain, selection_matrix, ObserverKind,
};
use modal_codesign::statespace::riccati_residual;
use modal_codesign::synthesis::DesignPlant;
use nalgebra::DMatrix;

fn plants() -> Vec<DesignPlant> {
    [two_mass_spec(), mmpa_lite_spec()]
        .iter()
        .map(|s| DesignPlant::from_benchmark(s).unwrap())
        .collect()
}

fn abscissa(a: &DMatrix<f64>) -> f64 {
    modal_codesign::linalg::spectral_abscissa(a).unwrap()
}

#[test]
fn riccati_initialization_is_accurate_and_stabilizing() {
    for plant in plants() {
        let g = &plant.truncated.model;
        let (q, v) = (1.0, 1e-10);
        let sol = output_observer_gain(&plant.truncated, q, v).unwrap();
        let qm = DMatrix::identity(g.nx(), g.nx()) * q;
        let vm = DMatrix::identity(g.ny(), g.ny()) * v;
        let res = riccati_residual(g.a(), g.c(), &qm, &vm, &sol.p);
        assert!(res <= 1e-8, "{}: residual {res:e}", plant.name);
        assert!(sol.residual <= 1e-8);
        let ao = g.a() - &sol.l * g.c();
        assert!(abscissa(&ao) < 0.0, "{}: A_o - L C_o not Hurwitz", plant.name);

        let f = flexible_subsystem(&plant.pm, &plant.p_star, &plant.pair).unwrap();
        let sol = error_observer_gain(&plant.pm, &plant.p_star, &plant.pair, q, v).unwrap();
        let cm = -f.c();
        let vm = DMatrix::identity(f.ny(), f.ny()) * v;
        let qm = DMatrix::identity(f.nx(), f.nx()) * q;
        assert!(riccati_residual(f.a(), &cm, &qm, &vm, &sol.p) <= 1e-8);
        assert!(abscissa(&(f.a() + &sol.l * f.c())) < 0.0);
    }
}

#[test]
fn error_observer_drops_the_rigid_body_states() {
    for plant in plants() {
        let controlled: Vec<usize> = (0..plant.n_flex()).collect();
        let l = output_observer_gain(&plant.truncated, 1.0, 1e-10).unwrap().l;
        let psi = selection_matrix(&plant.pm, &controlled, ObserverKind::OutputBased).unwrap();
        let out = build_output_observer(&plant.truncated, &l, &psi).unwrap();
        let l = error_observer_gain(&plant.pm, &plant.p_star, &plant.pair, 1.0, 1e-10)
            .unwrap()
            .l;
        let psi = selection_matrix(&plant.pm, &controlled, ObserverKind::ErrorBased).unwrap();
        let err = build_error_observer(&plant.pm, &plant.p_star, &plant.pair, &l, &psi).unwrap();
        assert_eq!(out.state_dim(), 2 * (plant.n_rb() + plant.n_flex()));
        assert_eq!(err.state_dim(), out.state_dim() - 2 * plant.n_rb());
        assert!(out.error_abscissa < 0.0 && err.error_abscissa < 0.0);
    }
}

/// Each selection row picks one retained modal velocity.
#[test]
fn selection_picks_velocities() {
    let plant = DesignPlant::from_benchmark(&two_mass_spec()).unwrap();
    let psi = selection_matrix(&plant.pm, &[0], ObserverKind::OutputBased).unwrap();
    assert_eq!(psi.shape(), (1, 4));
    assert_eq!(psi[(0, 3)], 1.0);
    assert_eq!(psi.sum(), 1.0);
    let psi = selection_matrix(&plant.pm, &[0], ObserverKind::ErrorBased).unwrap();
    assert_eq!(psi.shape(), (1, 2));
    assert_eq!(psi[(0, 1)], 1.0);
}
