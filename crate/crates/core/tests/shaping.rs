use std::f64::consts::PI;

use modal_codesign::benchplant::two_mass_spec;
use modal_codesign::config::default_shaping;
use modal_codesign::filter::RationalDiagonalFilter;
use modal_codesign::shaping::{
    channel_mag, compute_scalings, make_damping_filter, make_integral_filter, make_kfm,
    make_rolloff_filter, FlexControllerParams, ShapingFilterSet,
};
use modal_codesign::statespace::FrequencyEvaluator;
use modal_codesign::synthesis::DesignPlant;
use num_complex::Complex64;
use proptest::prelude::*;

fn jw(hz: f64) -> Complex64 {
    Complex64::new(0.0, 2.0 * PI * hz)
}

/// Filter response against its state-space realization.
fn realization_matches(f: &RationalDiagonalFilter, hz: f64) -> f64 {
    let ss = f.to_ss().unwrap();
    let ev = FrequencyEvaluator::new(&ss).unwrap();
    let a = ev.eval_hz(hz).unwrap();
    let b = f.eval(2.0 * PI * hz);
    (a - b).map(|z| z.norm()).amax()
}

#[test]
fn integral_filter_formula() {
    let f = make_integral_filter(&[2.5], 0.5, false).unwrap();
    for hz in [0.1, 1.0, 10.0, 300.0] {
        let s = jw(hz);
        let expect = 0.5 * (s + 2.0 * PI * 2.5) / s;
        assert!((f.eval_channel(0, s) - expect).norm() < 1e-12 * expect.norm());
    }
    let r = make_integral_filter(&[2.5], 0.5, true).unwrap();
    assert!(r.to_ss().unwrap().is_hurwitz(0.0).unwrap());
    assert!(realization_matches(&r, 3.0) < 1e-10);
}

#[test]
fn rolloff_filter_formula() {
    let f = make_rolloff_filter(&[40.0], 0.5, 20.0).unwrap();
    for hz in [1.0, 40.0, 1e3, 1e5] {
        let s = jw(hz);
        let w = 2.0 * PI * 40.0;
        let expect = 0.5 * (s + w) / (s / 20.0 + w);
        assert!((f.eval_channel(0, s) - expect).norm() < 1e-12 * expect.norm());
    }
    assert!((channel_mag(&f, 0, 1e-3) - 0.5).abs() < 1e-6);
    assert!((channel_mag(&f, 0, 1e7) - 10.0).abs() < 1e-3);
}

#[test]
fn damping_filter_peaks_at_mode() {
    let f = make_damping_filter(&[50.0], &[0.5], &[0.005], &[1e-3]).unwrap();
    let peak = channel_mag(&f, 0, 50.0);
    assert!((peak - 1e-3 * 0.5 / 0.005).abs() < 1e-9);
    assert!((channel_mag(&f, 0, 0.01) - 1e-3).abs() < 1e-9);
    assert!(channel_mag(&f, 0, 45.0) < peak && channel_mag(&f, 0, 55.0) < peak);
    assert!(realization_matches(&f, 49.0) < 1e-9 * peak);
}

#[test]
fn kfm_is_a_bandpass_with_gain_xi() {
    let w = 2.0 * PI * 50.0;
    let k = make_kfm(&FlexControllerParams {
        xi: vec![3.0],
        omega: vec![w],
        q: 1.0,
    })
    .unwrap();
    let at = k.eval_channel(0, Complex64::new(0.0, w));
    assert!((at - 3.0).norm() < 1e-12);
    assert!(channel_mag(&k, 0, 0.01) < 1e-3);
}

#[test]
fn scalings_normalize_the_plant_at_bandwidth() {
    let spec = two_mass_spec();
    let plant = DesignPlant::from_benchmark(&spec).unwrap();
    let err = [1e-6];
    let sc = compute_scalings(&plant.nominal, &spec.f_bw, &err).unwrap();
    let ev = FrequencyEvaluator::new(&plant.nominal).unwrap();
    let g = ev.eval_hz(spec.f_bw[0]).unwrap()[(0, 0)].norm();
    assert!((sc.wz_sc[0] * g * sc.ww1_sc[0] - 1.0).abs() < 1e-12);
    assert_eq!(sc.ww2_sc, vec![1.0]);
}

#[test]
fn layouts_place_the_weights() {
    let params = default_shaping(&two_mass_spec());
    let six = ShapingFilterSet::six_block(&params).unwrap();
    let four = ShapingFilterSet::four_block(&params).unwrap();
    assert!(six.ww3.is_some() && four.ww3.is_none());
    for hz in [1.0, 50.0, 900.0] {
        assert_eq!(channel_mag(&six.wz2, 0, hz), channel_mag(&four.ww1, 0, hz));
        assert_eq!(channel_mag(&four.wz2, 0, hz), 1.0);
        let ww3 = six.ww3.as_ref().unwrap();
        assert_eq!(channel_mag(ww3, 0, hz), channel_mag(&four.ww2, 0, hz));
    }
}

proptest! {
    #[test]
    fn rolloff_is_monotone(f_r in 1.0f64..500.0, alpha in 1.5f64..100.0, a in -2.0f64..4.0, b in 0.01f64..1.0) {
        let f = make_rolloff_filter(&[f_r], 0.5, alpha).unwrap();
        let lo = 10f64.powf(a);
        let hi = lo * (1.0 + b);
        prop_assert!(channel_mag(&f, 0, hi) >= channel_mag(&f, 0, lo));
    }

    #[test]
    fn damping_filter_is_bounded_by_its_peak(hz in 0.1f64..1e4, f0 in 5.0f64..500.0) {
        let f = make_damping_filter(&[f0], &[0.5], &[0.005], &[1.0]).unwrap();
        prop_assert!(channel_mag(&f, 0, hz) <= 100.0 * (1.0 + 1e-9));
        prop_assert!(channel_mag(&f, 0, hz) >= 1.0 - 1e-9);
    }
}
