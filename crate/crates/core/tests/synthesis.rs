use std::f64::consts::PI;

use modal_codesign::benchplant::two_mass_spec;
use modal_codesign::config::default_shaping;
use modal_codesign::linalg;
use modal_codesign::observer::sigma_subsystem;
use modal_codesign::statespace::{FrequencyEvaluator, HinfOptions};
use modal_codesign::synthesis::{
    synthesize, DesignPlant, FreeSet, OptimizerOptions, ParamsDoc, Phase,
    StructuredControllerParams, SynthesisProblem,
};
use nalgebra::DMatrix;
use num_complex::Complex64;

type CMat = DMatrix<Complex64>;

fn problem(six: bool) -> SynthesisProblem {
    let spec = two_mass_spec();
    let shaping = default_shaping(&spec);
    let plant = DesignPlant::from_benchmark(&spec).unwrap();
    if six {
        SynthesisProblem::six_block(plant, &shaping, &[1e-6]).unwrap()
    } else {
        SynthesisProblem::four_block(plant, &shaping, &[1e-6]).unwrap()
    }
}

fn with_damping(p: &SynthesisProblem) -> StructuredControllerParams {
    let mut params = p.initial_params(1.0, 1e-10).unwrap();
    params.xi = p.xi_scale().iter().map(|s| 0.7 * s).collect();
    params
}

fn real(m: &DMatrix<f64>) -> CMat {
    m.map(|v| Complex64::new(v, 0.0))
}

fn inv(m: &CMat) -> CMat {
    m.clone().try_inverse().expect("invertible")
}

fn cols(m: &CMat, r: std::ops::Range<usize>) -> CMat {
    m.columns(r.start, r.len()).into_owned()
}

fn hstack(parts: &[CMat]) -> CMat {
    let rows = parts[0].nrows();
    let n: usize = parts.iter().map(|p| p.ncols()).sum();
    let mut out = CMat::zeros(rows, n);
    let mut c = 0;
    for p in parts {
        out.view_mut((0, c), (rows, p.ncols())).copy_from(p);
        c += p.ncols();
    }
    out
}

fn vstack(parts: &[CMat]) -> CMat {
    let cols = parts[0].ncols();
    let n: usize = parts.iter().map(|p| p.nrows()).sum();
    let mut out = CMat::zeros(n, cols);
    let mut r = 0;
    for p in parts {
        out.view_mut((r, 0), (p.nrows(), cols)).copy_from(p);
        r += p.nrows();
    }
    out
}

/// `M(jw)` of the weighted channels from the block formulas, evaluated pointwise.
fn block_formula(p: &SynthesisProblem, params: &StructuredControllerParams, w: f64) -> CMat {
    let (n_rb, n_fl) = (p.n_rb(), p.n_flex());
    let g = FrequencyEvaluator::new(&p.plant.nominal).unwrap().eval(w).unwrap();
    let (g1, g2) = (cols(&g, 0..n_rb), cols(&g, n_rb..n_rb + n_fl));
    let k = params.krb_filter().unwrap().eval(w);
    let kf = p.kfm(params).unwrap().eval(w);
    let obs = p.observer(params).unwrap();
    let wz = real(&p.scalings.wz());
    let wz_inv = inv(&wz);
    let w1s = real(&p.scalings.ww1());
    let w2s = real(&p.scalings.ww2());
    let wt = &p.weights;
    let wz1 = wt.wz1_reg.eval(w);
    let wz2 = wt.wz2.eval(w);
    let ww1 = wt.ww1.eval(w);
    let ww2 = wt.ww2.eval(w);
    let i_rb = CMat::identity(n_rb, n_rb);
    let i_fl = CMat::identity(n_fl, n_fl);
    match &wt.ww3 {
        Some(ww3) => {
            let o = FrequencyEvaluator::new(&obs.realization)
                .unwrap()
                .eval(w)
                .unwrap();
            let o1 = cols(&o, 0..n_rb);
            let o2 = cols(&o, n_rb..n_rb + n_fl);
            let o3 = cols(&o, n_rb + n_fl..2 * n_rb + n_fl);
            let t = inv(&(&i_fl - &kf * &o2)) * &kf;
            let x = inv(&(&i_rb - &g2 * &t * &o3));
            let gd1 = &wz * &x * (&g1 + &g2 * &t * &o1) * &w1s;
            let gd2 = &wz * &x * &g2 * &w2s;
            let s = inv(&(&i_rb + &gd1 * &k));
            let right = hstack(&[ww1, &gd1 * &ww2, &gd2 * ww3.eval(w)]);
            let left = vstack(&[wz1, &wz2 * &k]);
            -(left * s * right)
        }
        None => {
            let sigma = sigma_subsystem(&obs, &p.kfm(params).unwrap()).unwrap();
            let sg = FrequencyEvaluator::new(&sigma).unwrap().eval(w).unwrap();
            let g1t = &wz * &g1 * &w1s;
            let g2t = &wz * &g2 * &w2s;
            let sgt = inv(&w2s) * sg * &wz_inv;
            let s = inv(&(&i_rb + &g1t * &k + &g2t * sgt));
            let right = hstack(&[&g1t * ww1, &g2t * ww2]);
            let left = vstack(&[wz1, -(&wz2 * &k)]);
            left * s * right
        }
    }
}

fn check_block_formula(six: bool) {
    let p = problem(six);
    let params = with_damping(&p);
    let cl = p.closed_loop(&params).unwrap();
    let ch = p.channel_map();
    let rows = ch.z();
    let wcols = ch.w();
    let m = cl.full.select(&rows, &wcols).unwrap();
    let ev = FrequencyEvaluator::new(&m).unwrap();
    for hz in linalg::logspace(-1.0, 3.0, 100) {
        let w = 2.0 * PI * hz;
        let a = ev.eval(w).unwrap();
        let b = block_formula(&p, &params, w);
        let scale = b.map(|z| z.norm()).amax().max(1.0);
        let err = (&a - &b).map(|z| z.norm()).amax();
        assert!(err <= 1e-9 * scale, "{hz} Hz: {err:e} (scale {scale:e})");
    }
}

#[test]
fn six_block_matches_block_formula() {
    check_block_formula(true);
}

#[test]
fn four_block_matches_block_formula() {
    check_block_formula(false);
}

/// `|S_kk| <= gamma / |Wz1_k Ww1_k|` for the achieved norm of the first column block.
#[test]
fn weighted_bound_holds_pointwise() {
    for six in [true, false] {
        let p = problem(six);
        let params = with_damping(&p);
        let cl = p.closed_loop(&params).unwrap();
        let ch = p.channel_map();
        let rb: Vec<usize> = ch.w1.clone().collect();
        let gamma = cl.norm(&rb, &HinfOptions::default()).unwrap();
        let s = FrequencyEvaluator::new(&cl.sensitivity().unwrap()).unwrap();
        let w = &p.weights;
        for hz in linalg::logspace(-1.0, 3.0, 200) {
            let sk = s.eval_hz(hz).unwrap()[(0, 0)].norm();
            let s_ = Complex64::new(0.0, 2.0 * PI * hz);
            let mut weight = w.wz1_reg.eval_channel(0, s_) * w.ww1.eval_channel(0, s_);
            if !six {
                // the first 4-block column is the process sensitivity
                let g = FrequencyEvaluator::new(&p.plant.nominal).unwrap();
                weight *= g.eval_hz(hz).unwrap()[(0, 0)]
                    * p.scalings.wz_sc[0]
                    * p.scalings.ww1_sc[0];
            }
            assert!(sk <= gamma / weight.norm() * (1.0 + 1e-6), "{hz} Hz");
        }
    }
}

#[test]
fn params_round_trip() {
    let p = problem(true);
    let params = with_damping(&p);
    let text = serde_json::to_string(&params.to_doc()).unwrap();
    let doc: ParamsDoc = serde_json::from_str(&text).unwrap();
    let back = StructuredControllerParams::from_doc(&doc).unwrap();
    assert!((&back.l - &params.l).amax() <= 1e-12);
    for (a, b) in back.krb.iter().zip(&params.krb) {
        for (x, y) in a.to_array().iter().zip(b.to_array()) {
            assert!((x - y).abs() <= 1e-12 * y.abs().max(1.0));
        }
    }
    assert_eq!(back.xi, params.xi);
}

fn small(budget: usize) -> OptimizerOptions {
    OptimizerOptions {
        budget,
        starts: 2,
        ..OptimizerOptions::default()
    }
}

#[test]
fn accepted_iterates_never_increase() {
    let p = problem(true);
    let init = p.initial_params(1.0, 1e-10).unwrap();
    let r = synthesize(&p, &init, FreeSet::ALL, &p.all_cols(), &small(150)).unwrap();
    let search: Vec<f64> = r
        .log
        .iter()
        .filter(|e| e.phase == Phase::Search)
        .map(|e| e.value)
        .collect();
    assert!(!search.is_empty());
    assert!(search.windows(2).all(|w| w[1] <= w[0]));
    assert!(r.log.windows(2).all(|w| w[1].evaluation >= w[0].evaluation));
    assert!(r.gamma <= r.gamma_init * (1.0 + 1e-3));
    assert!(r.evaluations <= 150 + 1);
    assert!(r.certificate.all_stable());
}

#[test]
fn zero_budget_returns_the_start() {
    let p = problem(true);
    let init = p.initial_params(1.0, 1e-10).unwrap();
    let r = synthesize(&p, &init, FreeSet::ALL, &p.all_cols(), &small(0)).unwrap();
    let a = r.best.to_doc();
    let b = init.to_doc();
    for (x, y) in a.krb.iter().zip(&b.krb) {
        for (u, v) in x.to_array().iter().zip(y.to_array()) {
            assert!((u - v).abs() <= 1e-12 * v.abs().max(1.0));
        }
    }
    assert_eq!(a.l, b.l);
    assert_eq!(a.xi, b.xi);
    assert!((r.gamma - r.gamma_init).abs() <= 1e-3 * r.gamma_init);
}

/// One free scalar: the pattern search lands within 2% of a dense scan.
#[test]
fn scalar_damping_gain_matches_scan() {
    let p = problem(true);
    let init = p.initial_params(1.0, 1e-10).unwrap();
    let free = FreeSet {
        krb: false,
        l: false,
        xi: true,
    };
    let cols = p.all_cols();
    let r = synthesize(&p, &init, free, &cols, &small(120)).unwrap();
    let scale = p.xi_scale()[0];
    let opts = HinfOptions::default();
    let mut best = f64::INFINITY;
    for k in 0..=160 {
        let mut q = init.clone();
        q.xi = vec![scale * (-2.0 + 0.05 * k as f64)];
        best = best.min(p.objective(&q, &cols, &opts).0);
    }
    assert!(best.is_finite());
    assert!(r.gamma <= 1.02 * best, "search {} vs scan {best}", r.gamma);
}

#[test]
fn sign_flip_destabilizes() {
    let p = problem(true);
    let init = p.initial_params(1.0, 1e-10).unwrap();
    assert!(p.grid_stability_check(&init).unwrap().all_stable());
    assert!(!p.grid_stability_check(&init.sign_flipped()).unwrap().all_stable());
}
