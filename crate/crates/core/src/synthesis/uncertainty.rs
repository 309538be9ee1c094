use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::filter::{RationalDiagonalFilter, Section};
use crate::linalg;
use crate::statespace::{FrequencyEvaluator, StateSpaceModel};

pub const VERIFICATION_POINTS: usize = 200;
const DOMINANCE_FACTOR: f64 = 1.05;

/// Nominal model plus additive output uncertainty covering the grid.
#[derive(Debug, Clone)]
pub struct UncertainPlant {
    pub nominal: StateSpaceModel,
    pub nominal_index: usize,
    pub locals: Vec<StateSpaceModel>,
    /// Input columns the uncertainty acts on.
    pub delta_cols: Vec<usize>,
    /// `(rows, cols)` of the uncertainty block.
    pub delta_dims: (usize, usize),
    /// Same second-order over-bound on every output channel.
    pub weight: RationalDiagonalFilter,
    /// Verification frequencies in rad/s.
    pub verification_w: Vec<f64>,
}

impl UncertainPlant {
    /// Largest grid deviation `sigma_max(G_p - G_nom)` on the uncertainty columns at `w`.
    pub fn deviation(&self, w: f64) -> Result<f64> {
        deviation_at(&self.nominal, &self.locals, &self.delta_cols, &[w]).map(|v| v[0])
    }

    pub fn weight_mag(&self, w: f64) -> f64 {
        if self.weight.is_empty() {
            0.0
        } else {
            self.weight.eval_channel(0, Complex64::new(0.0, w)).norm()
        }
    }
}

fn deviation_at(
    nominal: &StateSpaceModel,
    locals: &[StateSpaceModel],
    cols: &[usize],
    ws: &[f64],
) -> Result<Vec<f64>> {
    let rows: Vec<usize> = (0..nominal.ny()).collect();
    let ev0 = FrequencyEvaluator::new(&nominal.select(&rows, cols)?)?;
    let evs = locals
        .iter()
        .map(|g| FrequencyEvaluator::new(&g.select(&rows, cols)?))
        .collect::<Result<Vec<_>>>()?;
    ws.iter()
        .map(|&w| {
            let g0 = ev0.eval(w)?;
            let mut worst = 0.0f64;
            for ev in &evs {
                worst = worst.max(linalg::sigma_max(&(ev.eval(w)? - &g0)));
            }
            Ok(worst)
        })
        .collect()
}

fn shape(w: f64, h: f64, w_pk: f64, zeta: f64) -> f64 {
    let s = Complex64::new(0.0, w);
    ((h * s * s + w_pk * w_pk) / (s * s + 2.0 * zeta * w_pk * s + w_pk * w_pk)).norm()
}

/// Fits `k (h s^2 + w_pk^2)/(s^2 + 2 z w_pk s + w_pk^2)` above the worst grid
/// deviation on the flexible input columns `delta_cols`.
pub fn build_uncertain_plant(
    locals: Vec<StateSpaceModel>,
    nominal_index: usize,
    delta_cols: &[usize],
) -> Result<UncertainPlant> {
    if locals.len() < 2 {
        return Err(Error::param(
            "grid",
            "at least two frozen models are required",
        ));
    }
    if nominal_index >= locals.len() {
        return Err(Error::param("nominal_index", "outside the grid"));
    }
    let nominal = locals[nominal_index].clone();
    for g in &locals {
        if g.nu() != nominal.nu() || g.ny() != nominal.ny() {
            return Err(Error::dim(
                "build_uncertain_plant",
                "frozen models differ in dimensions",
            ));
        }
    }
    if delta_cols.iter().any(|&c| c >= nominal.nu()) {
        return Err(Error::dim(
            "build_uncertain_plant",
            "uncertainty column outside the plant inputs",
        ));
    }
    let mut omegas: Vec<f64> = Vec::new();
    for g in &locals {
        omegas.extend(g.poles()?.iter().map(|l| l.norm()).filter(|w| *w > 0.0));
    }
    let lo = omegas.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = omegas.iter().copied().fold(0.0, f64::max);
    let (lo, hi) = if omegas.is_empty() {
        (1.0, 1e3)
    } else {
        (lo / 100.0, hi * 100.0)
    };
    let verification_w = linalg::logspace(lo.log10(), hi.log10(), VERIFICATION_POINTS);
    let mut fit_w = verification_w.clone();
    for g in &locals {
        fit_w.extend(g.poles()?.iter().map(|l| l.im.abs()).filter(|w| *w > 0.0));
    }
    let dev = deviation_at(&nominal, &locals, delta_cols, &fit_w)?;
    let peak = dev.iter().copied().fold(0.0, f64::max);
    let delta_dims = (nominal.ny(), delta_cols.len());
    let channels = nominal.ny();
    if peak == 0.0 {
        return Ok(UncertainPlant {
            nominal,
            nominal_index,
            locals,
            delta_cols: delta_cols.to_vec(),
            delta_dims,
            weight: RationalDiagonalFilter::zero(channels),
            verification_w,
        });
    }
    let k_pk = dev
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap();
    let w_pk = fit_w[k_pk];
    let mut best: Option<(f64, f64, f64, f64)> = None;
    for &zeta in &linalg::logspace(-3.0, -0.15, 40) {
        for &h in &[0.0, 1e-3, 1e-2, 0.1, 1.0] {
            let k = fit_w
                .iter()
                .zip(&dev)
                .map(|(&w, &d)| DOMINANCE_FACTOR * d / shape(w, h, w_pk, zeta))
                .fold(0.0, f64::max);
            let excess: f64 = verification_w
                .iter()
                .map(|&w| (k * shape(w, h, w_pk, zeta)).max(1e-300).ln())
                .sum();
            if best.is_none_or(|b| excess < b.0) {
                best = Some((excess, k, h, zeta));
            }
        }
    }
    let (_, k, h, zeta) = best.unwrap();
    let sec = Section::new(
        vec![k * h, 0.0, k * w_pk * w_pk],
        vec![1.0, 2.0 * zeta * w_pk, w_pk * w_pk],
    )?;
    let weight = RationalDiagonalFilter::new(vec![vec![sec]; channels]);
    let up = UncertainPlant {
        nominal,
        nominal_index,
        locals,
        delta_cols: delta_cols.to_vec(),
        delta_dims,
        weight,
        verification_w,
    };
    for (&w, &d) in fit_w.iter().zip(&dev) {
        let wm = up.weight_mag(w);
        if wm < d {
            return Err(Error::WeightDominance {
                freq_hz: w / (2.0 * std::f64::consts::PI),
                weight: wm,
                deviation: d,
            });
        }
    }
    Ok(up)
}

/// Worst-case ratio `sigma_max(G_p - G_nom) / |W|` over the verification grid.
pub fn weighted_deviation(up: &UncertainPlant) -> Result<f64> {
    let dev = deviation_at(&up.nominal, &up.locals, &up.delta_cols, &up.verification_w)?;
    let mut worst = 0.0f64;
    for (&w, &d) in up.verification_w.iter().zip(&dev) {
        let wm = up.weight_mag(w);
        if d > 0.0 {
            worst = worst.max(if wm > 0.0 { d / wm } else { f64::INFINITY });
        }
    }
    Ok(worst)
}
