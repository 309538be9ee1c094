//! Loop-shape metrics, conventional/proposed comparisons and time-domain runs.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::statespace::{
    hinf_norm_with, simulate, zoh_discretize, FrequencyEvaluator, HinfOptions, StateSpaceModel,
};
use crate::synthesis::{StructuredControllerParams, SynthesisProblem};

/// First frequency (Hz) in `[f_lo, f_hi]` where `|L_kk|` falls through 1.
pub fn crossover_hz(
    loop_gain: &StateSpaceModel,
    k: usize,
    f_lo: f64,
    f_hi: f64,
) -> Result<Option<f64>> {
    let ev = FrequencyEvaluator::new(loop_gain)?;
    let mag = |f: f64| -> Result<f64> { Ok(ev.eval_hz(f)?[(k, k)].norm()) };
    let grid = linalg::logspace(f_lo.log10(), f_hi.log10(), 2000);
    let mut prev = (grid[0], mag(grid[0])?);
    for &f in &grid[1..] {
        let m = mag(f)?;
        if prev.1 >= 1.0 && m < 1.0 {
            let (mut a, mut b) = (prev.0, f);
            for _ in 0..60 {
                let c = (a * b).sqrt();
                if mag(c)? >= 1.0 {
                    a = c;
                } else {
                    b = c;
                }
            }
            return Ok(Some((a * b).sqrt()));
        }
        prev = (f, m);
    }
    Ok(None)
}

/// Peak of `sigma_max` and its frequency in Hz.
pub fn peak(g: &StateSpaceModel) -> Result<(f64, f64)> {
    let h = hinf_norm_with(g, &HinfOptions::default())?;
    Ok((h.value, h.peak_w / (2.0 * PI)))
}

pub fn to_db(x: f64) -> f64 {
    20.0 * x.log10()
}

/// Headline numbers of one design on one interconnection.
#[derive(Debug, Clone, Serialize)]
pub struct DesignMetrics {
    pub gamma: f64,
    /// Peak of the flexible shaping column of `M`.
    pub flex_peak: f64,
    /// Peak of the rigid-body shaping columns of `M`.
    pub rb_peak: f64,
    pub sensitivity_peak: f64,
    pub crossover_hz: Option<f64>,
    pub grid_stable: bool,
    pub worst_grid_abscissa: f64,
}

pub fn design_metrics(
    problem: &SynthesisProblem,
    params: &StructuredControllerParams,
) -> Result<DesignMetrics> {
    let cl = problem.closed_loop(params)?;
    let opts = problem.hinf;
    let f_bw = problem.weights.params.f_bw[0];
    let l = problem.rb_loop_gain(params, &problem.plant.nominal)?;
    let cert = problem.grid_stability_check(params)?;
    Ok(DesignMetrics {
        gamma: cl.norm(&problem.all_cols(), &opts)?,
        flex_peak: cl.norm(&problem.channel_map().flex_cols(), &opts)?,
        rb_peak: cl.norm(&problem.conventional_cols(), &opts)?,
        sensitivity_peak: hinf_norm_with(&cl.sensitivity()?, &opts)?.value,
        crossover_hz: crossover_hz(&l, 0, f_bw / 100.0, f_bw * 100.0)?,
        grid_stable: cert.all_stable(),
        worst_grid_abscissa: cert.worst_abscissa(),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeDomainOptions {
    pub duration: f64,
    /// Sample time; `None` uses `1 / (50 f_max)` of the retained modes.
    pub dt: Option<f64>,
    /// Samples before this time are excluded from the RMS.
    pub settle: f64,
    pub band_hz: [f64; 2],
    pub tones: usize,
    pub disturbance_amplitude: f64,
    /// Amplitude of a smooth back-and-forth reference move.
    pub reference_amplitude: f64,
    pub seed: u64,
}

impl Default for TimeDomainOptions {
    fn default() -> Self {
        Self {
            duration: 2.0,
            dt: None,
            settle: 0.5,
            band_hz: [45.0, 55.0],
            tones: 21,
            disturbance_amplitude: 1.0,
            reference_amplitude: 0.0,
            seed: 11,
        }
    }
}

impl TimeDomainOptions {
    pub fn sample_time(&self, problem: &SynthesisProblem) -> f64 {
        self.dt.unwrap_or_else(|| {
            let f_max = problem
                .plant
                .flexible_omegas()
                .iter()
                .copied()
                .fold(0.0, f64::max)
                / (2.0 * PI);
            1.0 / (50.0 * f_max.max(1.0))
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration > 0.0) || !(self.settle >= 0.0) || self.settle >= self.duration {
            return Err(Error::param("time_domain", "need duration > settle >= 0"));
        }
        if !(self.band_hz[0] > 0.0) || self.band_hz[1] < self.band_hz[0] || self.tones == 0 {
            return Err(Error::param(
                "band_hz",
                "need 0 < low <= high and at least one tone",
            ));
        }
        Ok(())
    }
}

/// Sum of equal-amplitude tones spread over `band` with seeded random phases,
/// normalized to unit RMS times `amplitude`.
pub fn band_disturbance(
    t: &[f64],
    band: [f64; 2],
    tones: usize,
    amplitude: f64,
    seed: u64,
) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let freqs = linalg::linspace(band[0], band[1], tones.max(1));
    let phases: Vec<f64> = freqs
        .iter()
        .map(|_| rng.random::<f64>() * 2.0 * PI)
        .collect();
    let a = amplitude * (2.0 / freqs.len() as f64).sqrt();
    t.iter()
        .map(|&tk| {
            freqs
                .iter()
                .zip(&phases)
                .map(|(f, ph)| a * (2.0 * PI * f * tk + ph).sin())
                .sum()
        })
        .collect()
}

/// Smooth out-and-back profile `A sin^2(pi t / T)`.
pub fn reference_profile(t: &[f64], duration: f64, amplitude: f64) -> Vec<f64> {
    t.iter()
        .map(|&tk| amplitude * (PI * tk / duration).sin().powi(2))
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct TimeDomainRun {
    pub t: Vec<f64>,
    pub reference: Vec<f64>,
    pub disturbance: Vec<f64>,
    /// Tracking error per sample and rigid-body channel.
    pub error: Vec<Vec<f64>>,
    pub rms: f64,
}

fn input_signals(
    problem: &SynthesisProblem,
    opts: &TimeDomainOptions,
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>, DMatrix<f64>)> {
    opts.validate()?;
    let dt = opts.sample_time(problem);
    let n = (opts.duration / dt).round() as usize + 1;
    let t: Vec<f64> = (0..n).map(|k| k as f64 * dt).collect();
    let r = reference_profile(&t, opts.duration, opts.reference_amplitude);
    let d = band_disturbance(
        &t,
        opts.band_hz,
        opts.tones,
        opts.disturbance_amplitude,
        opts.seed,
    );
    let (n_rb, n_fl) = (problem.n_rb(), problem.n_flex());
    let mut u = DMatrix::zeros(n, n_rb + n_fl);
    for k in 0..n {
        for c in 0..n_rb {
            u[(k, c)] = r[k];
        }
        for c in 0..n_fl {
            u[(k, n_rb + c)] = d[k];
        }
    }
    Ok((t, r, d, u))
}

fn rms_after(t: &[f64], y: &DMatrix<f64>, settle: f64) -> f64 {
    let mut acc = 0.0;
    let mut count = 0usize;
    for (k, &tk) in t.iter().enumerate() {
        if tk >= settle {
            acc += y.row(k).iter().map(|v| v * v).sum::<f64>();
            count += y.ncols();
        }
    }
    (acc / count.max(1) as f64).sqrt()
}

/// Frozen-plant run at the design point.
pub fn simulate_tracking(
    problem: &SynthesisProblem,
    params: &StructuredControllerParams,
    opts: &TimeDomainOptions,
) -> Result<TimeDomainRun> {
    simulate_tracking_at(problem, params, &problem.plant.nominal, opts)
}

pub fn simulate_tracking_at(
    problem: &SynthesisProblem,
    params: &StructuredControllerParams,
    g: &StateSpaceModel,
    opts: &TimeDomainOptions,
) -> Result<TimeDomainRun> {
    let m = problem.tracking_model(params, g)?;
    if !m.is_hurwitz(0.0)? {
        return Err(Error::Unstable {
            abscissa: m.spectral_abscissa()?,
        });
    }
    let (t, r, d, u) = input_signals(problem, opts)?;
    let tr = simulate(&m, &u, t[1] - t[0])?;
    let rms = rms_after(&t, &tr.y, opts.settle);
    Ok(TimeDomainRun {
        error: linalg::to_rows(&tr.y),
        t,
        reference: r,
        disturbance: d,
        rms,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct TimeDomainComparison {
    pub rms_on: f64,
    pub rms_off: f64,
    pub ratio: f64,
    #[serde(skip)]
    pub on: TimeDomainRun,
    #[serde(skip)]
    pub off: TimeDomainRun,
}

pub fn compare_time_domain(
    problem: &SynthesisProblem,
    on: &StructuredControllerParams,
    off: &StructuredControllerParams,
    opts: &TimeDomainOptions,
) -> Result<TimeDomainComparison> {
    let a = simulate_tracking(problem, on, opts)?;
    let b = simulate_tracking(problem, off, opts)?;
    Ok(TimeDomainComparison {
        rms_on: a.rms,
        rms_off: b.rms,
        ratio: a.rms / b.rms,
        on: a,
        off: b,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ScheduledRun {
    pub t: Vec<f64>,
    pub p: Vec<Vec<f64>>,
    pub error: Vec<Vec<f64>>,
    pub max_abs_error: f64,
    pub final_state_norm: f64,
    pub bounded: bool,
}

/// Closed loop with the scheduling parameter sweeping the domain and back,
/// `p(t) = lo + (hi - lo) (1 - cos(2 pi t / T)) / 2`, quantized to `levels`
/// frozen models. An empirical boundedness check only.
pub fn scheduled_simulation(
    problem: &SynthesisProblem,
    params: &StructuredControllerParams,
    opts: &TimeDomainOptions,
    levels: usize,
) -> Result<ScheduledRun> {
    if levels < 2 {
        return Err(Error::param(
            "levels",
            "at least two scheduling levels are required",
        ));
    }
    let (t, _, _, u) = input_signals(problem, opts)?;
    let dt = t[1] - t[0];
    let domain = problem.plant.pm.domain().to_vec();
    let p_of = |s: f64| -> Vec<f64> { domain.iter().map(|d| d[0] + (d[1] - d[0]) * s).collect() };
    let models = (0..levels)
        .map(|k| {
            let s = k as f64 / (levels - 1) as f64;
            let g = problem.plant.local(&p_of(s))?;
            zoh_discretize(&problem.tracking_model(params, &g)?, dt)
        })
        .collect::<Result<Vec<_>>>()?;
    let nx = models[0].ad.nrows();
    let mut x = DVector::zeros(nx);
    let mut err = Vec::with_capacity(t.len());
    let mut ps = Vec::with_capacity(t.len());
    let mut max_abs = 0.0f64;
    for (k, &tk) in t.iter().enumerate() {
        let s = 0.5 * (1.0 - (2.0 * PI * tk / opts.duration).cos());
        let idx = (s * (levels - 1) as f64).round() as usize;
        let dm = &models[idx];
        let uk = u.row(k).transpose();
        let y = dm.output(&x, &uk);
        max_abs = max_abs.max(y.amax());
        err.push(y.iter().copied().collect());
        ps.push(p_of(idx as f64 / (levels - 1) as f64));
        x = dm.step(&x, &uk);
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("scheduled simulation state"));
        }
    }
    let final_state_norm = x.norm();
    let bounded = max_abs.is_finite() && final_state_norm.is_finite() && final_state_norm < 1e12;
    Ok(ScheduledRun {
        t,
        p: ps,
        error: err,
        max_abs_error: max_abs,
        final_state_norm,
        bounded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crossover_of_integrator() {
        let g = StateSpaceModel::new(
            DMatrix::zeros(1, 1),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 2.0 * PI * 5.0),
            DMatrix::zeros(1, 1),
        )
        .unwrap();
        let f = crossover_hz(&g, 0, 0.1, 100.0).unwrap().unwrap();
        assert!((f - 5.0).abs() < 1e-9);
    }

    #[test]
    fn band_disturbance_rms() {
        let t: Vec<f64> = (0..200_000).map(|k| k as f64 * 1e-4).collect();
        let d = band_disturbance(&t, [45.0, 55.0], 21, 2.0, 3);
        let rms = (d.iter().map(|v| v * v).sum::<f64>() / d.len() as f64).sqrt();
        assert!((rms - 2.0).abs() < 0.05, "{rms}");
    }
}
