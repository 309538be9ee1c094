//! Static scalings, mixed-sensitivity weights and the band-pass flexible-mode law.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::{RationalDiagonalFilter, Section};
use crate::statespace::{FrequencyEvaluator, StateSpaceModel};

/// Denominator shift `s + w_I / REG_DIVISOR` used in place of the pure integrator.
pub const REG_DIVISOR: f64 = 1000.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingSet {
    pub wz_sc: Vec<f64>,
    pub ww1_sc: Vec<f64>,
    pub ww2_sc: Vec<f64>,
}

impl ScalingSet {
    pub fn identity(n_rb: usize, n_flex: usize) -> Self {
        Self {
            wz_sc: vec![1.0; n_rb],
            ww1_sc: vec![1.0; n_rb],
            ww2_sc: vec![1.0; n_flex],
        }
    }

    pub fn wz(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.wz_sc.clone().into())
    }

    pub fn ww1(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.ww1_sc.clone().into())
    }

    pub fn ww2(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.ww2_sc.clone().into())
    }
}

/// `Wz_sc = diag(1/expected_error)`, `Ww1_sc = diag(|G_ii(j 2 pi f_bw_i)|)^-1 Wz_sc^-1`,
/// `Ww2_sc = I` on the remaining inputs.
pub fn compute_scalings(
    g_nom: &StateSpaceModel,
    f_bw: &[f64],
    expected_error: &[f64],
) -> Result<ScalingSet> {
    let n = f_bw.len();
    if expected_error.len() != n || g_nom.ny() != n || g_nom.nu() < n {
        return Err(Error::dim(
            "compute_scalings",
            format!(
                "{} bandwidths, {} error levels, plant {}x{}",
                n,
                expected_error.len(),
                g_nom.ny(),
                g_nom.nu()
            ),
        ));
    }
    for (name, v) in [("f_bw", f_bw), ("expected_error", expected_error)] {
        if v.iter().any(|x| !(*x > 0.0) || !x.is_finite()) {
            return Err(Error::param(name, "entries must be positive and finite"));
        }
    }
    let ev = FrequencyEvaluator::new(g_nom)?;
    let wz_sc: Vec<f64> = expected_error.iter().map(|e| 1.0 / e).collect();
    let mut ww1_sc = Vec::with_capacity(n);
    for i in 0..n {
        let g = ev.eval_hz(f_bw[i])?[(i, i)].norm();
        if !(g > 0.0) {
            return Err(Error::param(
                "f_bw",
                format!("plant diagonal {i} vanishes at {} Hz", f_bw[i]),
            ));
        }
        ww1_sc.push(1.0 / (g * wz_sc[i]));
    }
    Ok(ScalingSet {
        wz_sc,
        ww1_sc,
        ww2_sc: vec![1.0; g_nom.nu() - n],
    })
}

fn check_positive(name: &'static str, v: &[f64]) -> Result<()> {
    if v.iter().any(|x| !(*x > 0.0) || !x.is_finite()) {
        return Err(Error::param(name, "entries must be positive and finite"));
    }
    Ok(())
}

/// `K_s (s + 2 pi f_I) / s` per channel. With `regularized`, the pole moves to
/// `-2 pi f_I / REG_DIVISOR` so the weighted plant stays stable.
pub fn make_integral_filter(
    f_i: &[f64],
    k_s: f64,
    regularized: bool,
) -> Result<RationalDiagonalFilter> {
    check_positive("f_I", f_i)?;
    check_positive("K_s", &[k_s])?;
    let ch = f_i
        .iter()
        .map(|&f| {
            let w = 2.0 * PI * f;
            let pole = if regularized { w / REG_DIVISOR } else { 0.0 };
            Section::new(vec![k_s, k_s * w], vec![1.0, pole]).map(|s| vec![s])
        })
        .collect::<Result<_>>()?;
    Ok(RationalDiagonalFilter::new(ch))
}

/// `K_r (s + 2 pi f_r) / (s / alpha + 2 pi f_r)` per channel.
pub fn make_rolloff_filter(f_r: &[f64], k_r: f64, alpha: f64) -> Result<RationalDiagonalFilter> {
    check_positive("f_r", f_r)?;
    check_positive("K_r", &[k_r])?;
    if !(alpha > 1.0) || !alpha.is_finite() {
        return Err(Error::param("alpha", "must exceed 1"));
    }
    let ch = f_r
        .iter()
        .map(|&f| {
            let w = 2.0 * PI * f;
            Section::new(vec![k_r, k_r * w], vec![1.0 / alpha, w]).map(|s| vec![s])
        })
        .collect::<Result<_>>()?;
    Ok(RationalDiagonalFilter::new(ch))
}

/// Inverse notch `eps (s^2/w^2 + 2 b1 s/w + 1) / (s^2/w^2 + 2 b2 s/w + 1)` peaking
/// by `b1 / b2` at `w = 2 pi f`.
pub fn make_damping_filter(
    f: &[f64],
    beta1: &[f64],
    beta2: &[f64],
    eps: &[f64],
) -> Result<RationalDiagonalFilter> {
    let n = f.len();
    if beta1.len() != n || beta2.len() != n || eps.len() != n {
        return Err(Error::dim(
            "damping filter",
            "per-channel parameter lists differ in length",
        ));
    }
    check_positive("f", f)?;
    check_positive("beta2", beta2)?;
    check_positive("eps", eps)?;
    let mut ch = Vec::with_capacity(n);
    for i in 0..n {
        if beta1[i] < beta2[i] || !beta1[i].is_finite() {
            return Err(Error::param(
                "beta1",
                "must be at least beta2 so the filter peaks at the mode",
            ));
        }
        let w = 2.0 * PI * f[i];
        let e = eps[i];
        ch.push(vec![Section::new(
            vec![e / (w * w), 2.0 * e * beta1[i] / w, e],
            vec![1.0 / (w * w), 2.0 * beta2[i] / w, 1.0],
        )?]);
    }
    Ok(RationalDiagonalFilter::new(ch))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlexControllerParams {
    pub xi: Vec<f64>,
    /// Center frequencies in rad/s.
    pub omega: Vec<f64>,
    pub q: f64,
}

/// `xi (w/Q) s / (s^2 + (w/Q) s + w^2)` per controlled mode.
pub fn make_kfm(params: &FlexControllerParams) -> Result<RationalDiagonalFilter> {
    if params.xi.len() != params.omega.len() {
        return Err(Error::dim("K_FM", "xi and omega lengths differ"));
    }
    check_positive("omega", &params.omega)?;
    check_positive("Q", &[params.q])?;
    if params.xi.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("xi"));
    }
    let ch = params
        .xi
        .iter()
        .zip(&params.omega)
        .map(|(&xi, &w)| {
            let b = w / params.q;
            Section::new(vec![xi * b, 0.0], vec![1.0, b, w * w]).map(|s| vec![s])
        })
        .collect::<Result<_>>()?;
    Ok(RationalDiagonalFilter::new(ch))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlexWeight {
    pub f: f64,
    #[serde(default = "default_beta1")]
    pub beta1: f64,
    #[serde(default = "default_beta2")]
    pub beta2: f64,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(rename = "Q", default = "default_q")]
    pub q: f64,
}

fn default_beta1() -> f64 {
    0.5
}
fn default_beta2() -> f64 {
    0.005
}
fn default_eps() -> f64 {
    1.0
}
fn default_q() -> f64 {
    1.0
}

impl FlexWeight {
    pub fn at(f: f64) -> Self {
        Self {
            f,
            beta1: default_beta1(),
            beta2: default_beta2(),
            eps: default_eps(),
            q: default_q(),
        }
    }
}

/// Filter parameter block of a synthesis configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShapingParams {
    #[serde(rename = "K_s", default = "half")]
    pub k_s: f64,
    #[serde(rename = "K_r", default = "half")]
    pub k_r: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    pub f_bw: Vec<f64>,
    #[serde(rename = "f_I", default, skip_serializing_if = "Option::is_none")]
    pub f_i: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_r: Option<Vec<f64>>,
    #[serde(default)]
    pub flex: Vec<FlexWeight>,
}

fn half() -> f64 {
    0.5
}
fn default_alpha() -> f64 {
    20.0
}

impl ShapingParams {
    pub fn new(f_bw: Vec<f64>, flex: Vec<FlexWeight>) -> Self {
        Self {
            k_s: 0.5,
            k_r: 0.5,
            alpha: 20.0,
            f_bw,
            f_i: None,
            f_r: None,
            flex,
        }
    }

    /// Integral corner per channel, `f_bw / 4` unless set.
    pub fn f_i(&self) -> Vec<f64> {
        self.f_i
            .clone()
            .unwrap_or_else(|| self.f_bw.iter().map(|f| f / 4.0).collect())
    }

    /// Roll-off corner per channel, `4 f_bw` unless set.
    pub fn f_r(&self) -> Vec<f64> {
        self.f_r
            .clone()
            .unwrap_or_else(|| self.f_bw.iter().map(|f| 4.0 * f).collect())
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.f_bw.len();
        if n == 0 {
            return Err(Error::param(
                "f_bw",
                "at least one rigid-body channel is required",
            ));
        }
        if self.f_i().len() != n || self.f_r().len() != n {
            return Err(Error::dim(
                "shaping",
                "f_I and f_r need one entry per f_bw channel",
            ));
        }
        check_positive("f_bw", &self.f_bw)?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockLayout {
    /// Output-based observer: weights on `(z1, z2)` and `(w1, w2, w3)`.
    Six,
    /// Error-based observer: weights on `(z1, z2)` and `(w1, w2)`.
    Four,
}

/// Weights of either interconnection. Missing entries in the 4-block layout
/// are `None` (`ww3`).
#[derive(Debug, Clone)]
pub struct ShapingFilterSet {
    pub layout: BlockLayout,
    pub wz1: RationalDiagonalFilter,
    /// Norm-evaluation form of `wz1` with the shifted integrator.
    pub wz1_reg: RationalDiagonalFilter,
    pub wz2: RationalDiagonalFilter,
    pub ww1: RationalDiagonalFilter,
    pub ww2: RationalDiagonalFilter,
    pub ww3: Option<RationalDiagonalFilter>,
    pub params: ShapingParams,
}

impl ShapingFilterSet {
    /// Output-based layout: `Wz2` roll-off, `Ww1 = Ww2 = I`, `Ww3` damping filter.
    pub fn six_block(params: &ShapingParams) -> Result<Self> {
        params.validate()?;
        let n = params.f_bw.len();
        let f_i = params.f_i();
        Ok(Self {
            layout: BlockLayout::Six,
            wz1: make_integral_filter(&f_i, params.k_s, false)?,
            wz1_reg: make_integral_filter(&f_i, params.k_s, true)?,
            wz2: make_rolloff_filter(&params.f_r(), params.k_r, params.alpha)?,
            ww1: RationalDiagonalFilter::identity(n),
            ww2: RationalDiagonalFilter::identity(n),
            ww3: Some(damping_from(params)?),
            params: params.clone(),
        })
    }

    /// Error-based layout: `Ww1` roll-off, `Wz2 = I`, `Ww2` damping filter.
    pub fn four_block(params: &ShapingParams) -> Result<Self> {
        params.validate()?;
        let n = params.f_bw.len();
        let f_i = params.f_i();
        Ok(Self {
            layout: BlockLayout::Four,
            wz1: make_integral_filter(&f_i, params.k_s, false)?,
            wz1_reg: make_integral_filter(&f_i, params.k_s, true)?,
            wz2: RationalDiagonalFilter::identity(n),
            ww1: make_rolloff_filter(&params.f_r(), params.k_r, params.alpha)?,
            ww2: damping_from(params)?,
            ww3: None,
            params: params.clone(),
        })
    }
}

fn damping_from(params: &ShapingParams) -> Result<RationalDiagonalFilter> {
    let fl = &params.flex;
    if fl.is_empty() {
        return Err(Error::param(
            "flex",
            "at least one controlled flexible mode is required",
        ));
    }
    make_damping_filter(
        &fl.iter().map(|w| w.f).collect::<Vec<_>>(),
        &fl.iter().map(|w| w.beta1).collect::<Vec<_>>(),
        &fl.iter().map(|w| w.beta2).collect::<Vec<_>>(),
        &fl.iter().map(|w| w.eps).collect::<Vec<_>>(),
    )
}

/// Magnitude of channel `k` at `f` Hz.
pub fn channel_mag(f: &RationalDiagonalFilter, k: usize, hz: f64) -> f64 {
    f.eval_channel(k, Complex64::new(0.0, 2.0 * PI * hz)).norm()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rolloff_asymptotes() {
        let f = make_rolloff_filter(&[400.0], 0.5, 20.0).unwrap();
        assert!((channel_mag(&f, 0, 0.0) - 0.5).abs() < 1e-12);
        assert!((channel_mag(&f, 0, 1e9) - 10.0).abs() < 1e-4);
    }

    #[test]
    fn damping_filter_peak_ratio() {
        let f = make_damping_filter(&[50.0], &[0.5], &[0.005], &[2.0]).unwrap();
        assert!((channel_mag(&f, 0, 50.0) - 200.0).abs() < 1e-9);
        assert!((channel_mag(&f, 0, 0.0) - 2.0).abs() < 1e-12);
        assert!(make_damping_filter(&[50.0], &[0.001], &[0.005], &[1.0]).is_err());
    }

    #[test]
    fn kfm_center_gain_is_xi() {
        let w = 2.0 * PI * 50.0;
        let k = make_kfm(&FlexControllerParams {
            xi: vec![-3.0],
            omega: vec![w],
            q: 1.0,
        })
        .unwrap();
        assert!((channel_mag(&k, 0, 50.0) - 3.0).abs() < 1e-12);
        assert_eq!(channel_mag(&k, 0, 0.0), 0.0);
    }

    #[test]
    fn shaping_params_json_defaults() {
        let p: ShapingParams = serde_json::from_str(r#"{"f_bw":[10],"flex":[{"f":50}]}"#).unwrap();
        assert_eq!(p.k_s, 0.5);
        assert_eq!(p.f_i(), vec![2.5]);
        assert_eq!(p.f_r(), vec![40.0]);
        assert_eq!(p.flex[0].beta2, 0.005);
        assert!(serde_json::from_str::<ShapingParams>(r#"{"f_bw":[10],"bogus":1}"#).is_err());
    }
}
