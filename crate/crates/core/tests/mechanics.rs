use std::time::Instant;

use modal_codesign::benchplant::{make_mmpa_lite, make_two_mass, mmpa_lite_spec};
use modal_codesign::mechanics::{
    group_and_partition, modal_decompose, MechanicalModel, PositionMap,
};
use modal_codesign::observer::truncate_with_compliance;
use modal_codesign::StateSpaceModel;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    &a * a.transpose() + DMatrix::identity(n, n) * 0.5
}

/// Stiffness with `n_rb` zero-energy directions.
fn random_psd(rng: &mut ChaCha8Rng, n: usize, n_rb: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n - n_rb, |_, _| rng.random_range(-1.0..1.0));
    (&a * a.transpose()) * 100.0
}

fn model(m: DMatrix<f64>, k: DMatrix<f64>) -> MechanicalModel {
    let n = m.nrows();
    let domain = vec![[0.0, 1.0]];
    MechanicalModel::new(
        "random",
        m,
        DMatrix::zeros(n, n),
        k,
        PositionMap::constant(DMatrix::identity(n, n), domain.clone()),
        PositionMap::constant(DMatrix::identity(n, n), domain),
    )
    .unwrap()
}

fn static_gain(g: &StateSpaceModel) -> DMatrix<f64> {
    let x = g.a().clone().lu().solve(g.b()).unwrap();
    g.d() - g.c() * x
}

#[test]
fn modal_algebra_on_random_pairs() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst_m = 0.0f64;
    let mut worst_k = 0.0f64;
    for trial in 0..50 {
        let n = rng.random_range(1..=10);
        let n_rb = if trial % 2 == 0 {
            0
        } else {
            rng.random_range(0..n.min(3))
        };
        let m = random_spd(&mut rng, n);
        let k = random_psd(&mut rng, n, n_rb);
        let dec = modal_decompose(&model(m.clone(), k.clone())).unwrap();
        let v = &dec.vtilde;
        let mm = v.transpose() * &m * v;
        let kk = v.transpose() * &k * v;
        let w2 = DMatrix::from_diagonal(&dec.omega.iter().map(|w| w * w).collect::<Vec<_>>().into());
        worst_m = worst_m.max((mm - DMatrix::identity(n, n)).amax());
        worst_k = worst_k.max((kk - w2).amax());
        assert!(dec.omega.windows(2).all(|w| w[0] <= w[1]));
    }
    assert!(worst_m <= 1e-10, "V'MV - I = {worst_m:e}");
    assert!(worst_k <= 1e-8, "V'KV - W^2 = {worst_k:e}");
    assert!(t0.elapsed().as_secs_f64() < 10.0);
}

#[test]
fn two_mass_frequencies() {
    let dec = modal_decompose(&make_two_mass()).unwrap();
    assert_eq!(dec.n_rb, 1);
    let f = dec.frequencies_hz();
    assert_eq!(f[0], 0.0);
    assert!((f[1] - 50.0).abs() < 1e-9);
    assert!((dec.zeta[1] - 0.01).abs() < 1e-12);
}

/// `Phi_s V_f W_f^-2 V_f' Phi_a` summed over every flexible mode.
fn flexible_static(model: &MechanicalModel, p: &[f64]) -> DMatrix<f64> {
    let dec = modal_decompose(model).unwrap();
    let mut inner = DMatrix::zeros(model.nq(), model.nq());
    for j in dec.n_rb..dec.n_modes() {
        let v = dec.vtilde.column(j);
        inner += v * v.transpose() / dec.omega[j].powi(2);
    }
    model.phi_s.eval(p).unwrap() * inner * model.phi_a.eval(p).unwrap()
}

#[test]
fn compliance_preserves_flexible_static_gain() {
    let spec = mmpa_lite_spec();
    let model = make_mmpa_lite();
    let dec = modal_decompose(&model).unwrap();
    let pm = group_and_partition(&dec, &model, spec.n_rb, &spec.retain).unwrap();
    assert!(pm.n_disc > 0);
    let points: Vec<Vec<f64>> = (0..11)
        .map(|k| {
            let s = k as f64 / 10.0;
            vec![s, 1.0 - 0.5 * s]
        })
        .collect();
    for p in &points {
        let tm = truncate_with_compliance(&pm, p).unwrap();
        let full = flexible_static(&model, p);
        let r = &tm.model;
        let nr = 2 * pm.n_rb;
        let idx: Vec<usize> = (nr..r.nx()).collect();
        let flex = StateSpaceModel::new(
            r.a().select_rows(&idx).select_columns(&idx),
            r.b().select_rows(&idx),
            r.c().select_columns(&idx),
            tm.d_o.clone(),
        )
        .unwrap();
        let err = (static_gain(&flex) - &full).amax();
        let scale = full.amax().max(1e-30);
        assert!(err <= 1e-10 * scale.max(1.0), "p = {p:?}: {err:e} (scale {scale:e})");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn mass_normalization_holds(seed in any::<u64>(), n in 1usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_spd(&mut rng, n);
        let k = random_psd(&mut rng, n, 0);
        let dec = modal_decompose(&model(m.clone(), k)).unwrap();
        let mm = dec.vtilde.transpose() * &m * &dec.vtilde;
        prop_assert!((mm - DMatrix::identity(n, n)).amax() <= 1e-10);
    }

    #[test]
    fn local_model_is_position_consistent(p in 0.0f64..1.0) {
        let m = make_two_mass();
        let g = m.evaluate_local(&[p]).unwrap();
        let c = m.phi_s.eval(&[p]).unwrap();
        prop_assert!((c[(0, 0)] - (1.0 - p)).abs() < 1e-14);
        prop_assert!((c[(0, 1)] - p).abs() < 1e-14);
        prop_assert_eq!(g.nx(), 4);
    }
}
