use std::f64::consts::PI;

use modal_codesign::linalg;
use modal_codesign::statespace::{
    care_solve, feedback, freq_response, hinf_norm, parallel, series, simulate, FrequencyEvaluator,
};
use modal_codesign::StateSpaceModel;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_stable(
    rng: &mut ChaCha8Rng,
    n: usize,
    nu: usize,
    ny: usize,
    with_d: bool,
) -> StateSpaceModel {
    let q = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let rho = linalg::spectral_abscissa(&q).unwrap() + rng.random_range(0.05..1.0);
    let a = q - DMatrix::identity(n, n) * rho;
    let b = DMatrix::from_fn(n, nu, |_, _| rng.random_range(-1.0..1.0));
    let c = DMatrix::from_fn(ny, n, |_, _| rng.random_range(-1.0..1.0));
    let d = if with_d {
        DMatrix::from_fn(ny, nu, |_, _| rng.random_range(-0.5..0.5))
    } else {
        DMatrix::zeros(ny, nu)
    };
    StateSpaceModel::new(a, b, c, d).unwrap()
}

fn dense_response(g: &StateSpaceModel, w: f64) -> DMatrix<Complex64> {
    let n = g.nx();
    let m = DMatrix::from_fn(n, n, |i, j| {
        let v = Complex64::new(-g.a()[(i, j)], 0.0);
        if i == j {
            v + Complex64::new(0.0, w)
        } else {
            v
        }
    });
    let b = g.b().map(|v| Complex64::new(v, 0.0));
    let x = m.lu().solve(&b).unwrap();
    g.c().map(|v| Complex64::new(v, 0.0)) * x + g.d().map(|v| Complex64::new(v, 0.0))
}

fn rel_err(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    (a - b).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
        / b.iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
            .max(1e-300)
}

#[test]
fn response_matches_dense_solve() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let g = random_stable(&mut rng, 4, 2, 3, true);
    let freqs = linalg::logspace(-2.0, 2.0, 10);
    let fr = freq_response(&g, &freqs).unwrap();
    for (f, v) in freqs.iter().zip(&fr.values) {
        let oracle = dense_response(&g, 2.0 * PI * f);
        assert!(rel_err(v, &oracle) < 1e-12);
    }
}

#[test]
fn series_is_pointwise_product() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let g1 = random_stable(&mut rng, 3, 2, 2, true);
    let g2 = random_stable(&mut rng, 3, 2, 2, true);
    let s = series(&g1, &g2).unwrap();
    assert_eq!(s.nx(), 6);
    let e1 = FrequencyEvaluator::new(&g1).unwrap();
    let e2 = FrequencyEvaluator::new(&g2).unwrap();
    let es = FrequencyEvaluator::new(&s).unwrap();
    for w in linalg::logspace(-2.0, 2.0, 50) {
        let oracle = e2.eval(w).unwrap() * e1.eval(w).unwrap();
        assert!(rel_err(&es.eval(w).unwrap(), &oracle) <= 1e-10);
    }
}

#[test]
fn parallel_and_feedback_match_pointwise_arithmetic() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let g1 = random_stable(&mut rng, 3, 2, 2, true);
    let g2 = random_stable(&mut rng, 2, 2, 2, false);
    let p = parallel(&g1, &g2).unwrap();
    let f = feedback(&g1, &g2, -1.0).unwrap();
    let (e1, e2) = (
        FrequencyEvaluator::new(&g1).unwrap(),
        FrequencyEvaluator::new(&g2).unwrap(),
    );
    let (ep, ef) = (
        FrequencyEvaluator::new(&p).unwrap(),
        FrequencyEvaluator::new(&f).unwrap(),
    );
    let eye = DMatrix::<Complex64>::identity(2, 2);
    for w in linalg::logspace(-2.0, 2.0, 50) {
        let (h1, h2) = (e1.eval(w).unwrap(), e2.eval(w).unwrap());
        assert!(rel_err(&ep.eval(w).unwrap(), &(&h1 + &h2)) <= 1e-10);
        let closed = (&eye + &h1 * &h2).try_inverse().unwrap() * &h1;
        assert!(rel_err(&ef.eval(w).unwrap(), &closed) <= 1e-10);
    }
}

#[test]
fn stable_by_construction_is_hurwitz() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..20 {
        let n = rng.random_range(1..=8);
        let g = random_stable(&mut rng, n, 1, 1, false);
        assert!(g.is_hurwitz(0.0).unwrap());
    }
}

fn dense_grid_peak(g: &StateSpaceModel, points: usize) -> f64 {
    let mags: Vec<f64> = g.poles().unwrap().iter().map(|l| l.norm()).collect();
    let lo = mags.iter().copied().fold(f64::INFINITY, f64::min) / 1000.0;
    let hi = mags.iter().copied().fold(0.0, f64::max) * 1000.0;
    let mut best = linalg::sigma_max(&dense_response(g, 0.0));
    for w in linalg::logspace(lo.log10(), hi.log10(), points) {
        best = best.max(linalg::sigma_max(&dense_response(g, w)));
    }
    best
}

#[test]
fn hinf_agrees_with_dense_grid_on_random_systems() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for k in 0..20 {
        let n = rng.random_range(1..=10);
        let g = random_stable(&mut rng, n, 2, 2, k % 2 == 0);
        let h = hinf_norm(&g, 1e-5).unwrap();
        let grid = dense_grid_peak(&g, 100_000);
        assert!((h - grid).abs() / grid <= 5e-3, "system {k}: {h} vs {grid}");
    }
}

#[test]
fn hinf_of_resonance() {
    let g = StateSpaceModel::new(
        DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, -0.2]),
        DMatrix::from_column_slice(2, 1, &[0.0, 1.0]),
        DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
        DMatrix::zeros(1, 1),
    )
    .unwrap();
    let h = hinf_norm(&g, 1e-6).unwrap();
    assert!((h - 5.0252).abs() / 5.0252 < 1e-3);
    let grid = dense_grid_peak(&g, 100_000);
    assert!((h - grid).abs() / grid < 1e-4);
}

#[test]
fn care_on_random_detectable_systems() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..10 {
        let a = DMatrix::from_fn(4, 4, |_, _| rng.random_range(-1.0..1.0));
        let c = DMatrix::from_fn(2, 4, |_, _| rng.random_range(-1.0..1.0));
        let q = DMatrix::identity(4, 4);
        let v = DMatrix::identity(2, 2);
        let sol = care_solve(&a, &c, &q, &v).unwrap();
        let r = &a * &sol.p + &sol.p * a.transpose() - &sol.p * c.transpose() * &c * &sol.p + &q;
        assert!(r.norm() <= 1e-8, "residual {}", r.norm());
        assert!(linalg::spectral_abscissa(&(&a - &sol.l * &c)).unwrap() < 0.0);
        let sym = (&sol.p - sol.p.transpose()).norm();
        assert!(sym < 1e-12);
        assert!(sol.p.clone().symmetric_eigen().eigenvalues.min() > -1e-10);
    }
}

#[test]
fn sinusoid_steady_state_amplitude_matches_frequency_response() {
    let w0 = 2.0 * PI * 50.0;
    let zeta = 0.01;
    let g = StateSpaceModel::new(
        DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -w0 * w0, -2.0 * zeta * w0]),
        DMatrix::from_column_slice(2, 1, &[0.0, 1.0]),
        DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
        DMatrix::zeros(1, 1),
    )
    .unwrap();
    let dt = 1.0 / (50.0 * 50.0 * 4.0);
    let n = (3.0 / dt) as usize;
    let u = DMatrix::from_fn(n, 1, |k, _| (w0 * k as f64 * dt).sin());
    let tr = simulate(&g, &u, dt).unwrap();
    let tail = tr.y.rows(n - (0.2 / dt) as usize, (0.2 / dt) as usize);
    let amp = tail.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let exact = FrequencyEvaluator::new(&g).unwrap().eval(w0).unwrap()[(0, 0)].norm();
    assert!((amp - exact).abs() / exact < 0.01, "{amp} vs {exact}");
    let _ = DVector::<f64>::zeros(0);
}
