use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::params::{FreeSet, ParamScaling, ParamsDoc, StructuredControllerParams};
use super::problem::{GridCertificate, SynthesisProblem};
use crate::error::{Error, Result};
use crate::statespace::{HinfMethod, HinfOptions};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerOptions {
    /// Objective evaluations across all starts, stabilization included.
    pub budget: usize,
    pub starts: usize,
    pub seed: u64,
    pub initial_step: f64,
    pub min_step: f64,
    /// Standard deviation of the start perturbations in optimizer coordinates.
    pub perturbation: f64,
    /// Norm accuracy used inside the search.
    pub search_tol: f64,
    pub search_check_points: usize,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            budget: 4000,
            starts: 5,
            seed: 7,
            initial_step: 0.5,
            min_step: 1e-3,
            perturbation: 0.3,
            search_tol: 1e-3,
            search_check_points: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    /// Minimizing the worst grid abscissa to reach a feasible start.
    Stabilize,
    /// Minimizing the weighted norm.
    Search,
}

/// One accepted incumbent. `value` is the worst grid abscissa while
/// stabilizing and the weighted norm while searching.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct IterateRecord {
    pub evaluation: usize,
    pub start: usize,
    pub phase: Phase,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SynthesisResult {
    pub params: ParamsDoc,
    pub gamma: f64,
    pub gamma_init: f64,
    /// Accepted incumbents in evaluation order; non-increasing.
    pub log: Vec<IterateRecord>,
    pub certificate: GridCertificate,
    pub evaluations: usize,
    pub n_params: usize,
    pub free: FreeSet,
    pub objective_cols: Vec<usize>,
    #[serde(skip)]
    pub wall_time_s: f64,
    #[serde(skip)]
    pub best: StructuredControllerParams,
}

struct Search<'a> {
    problem: &'a SynthesisProblem,
    scaling: ParamScaling,
    cols: &'a [usize],
    hinf: HinfOptions,
    evals: usize,
}

impl Search<'_> {
    fn gamma(&self, x: &[f64]) -> f64 {
        self.problem
            .objective(&self.scaling.decode(x), self.cols, &self.hinf)
            .0
    }

    fn abscissa(&self, x: &[f64]) -> f64 {
        self.problem.abscissa_objective(&self.scaling.decode(x))
    }

    /// Poll-and-pattern search from `x` while `evals < limit`. Calls
    /// `accept(evals, value)` for every improvement.
    fn pattern_search(
        &mut self,
        mut x: Vec<f64>,
        mut fx: f64,
        limit: usize,
        opts: &OptimizerOptions,
        use_abscissa: bool,
        stop_below: f64,
        mut accept: impl FnMut(usize, f64, &[f64]),
    ) -> (Vec<f64>, f64) {
        let n = x.len();
        let mut step = opts.initial_step;
        let f = |s: &Self, y: &[f64]| {
            if use_abscissa {
                s.abscissa(y)
            } else {
                s.gamma(y)
            }
        };
        while step >= opts.min_step && self.evals < limit && fx > stop_below && n > 0 {
            let room = limit - self.evals;
            let cands: Vec<Vec<f64>> = (0..2 * n)
                .take(room)
                .map(|k| {
                    let mut y = x.clone();
                    y[k / 2] += if k % 2 == 0 { step } else { -step };
                    y
                })
                .collect();
            let vals: Vec<f64> = cands.par_iter().map(|y| f(self, y)).collect();
            self.evals += cands.len();
            let mut best = None;
            for (k, v) in vals.iter().enumerate() {
                if *v < fx - 1e-12 * fx.abs() && best.is_none_or(|(_, b)| *v < b) {
                    best = Some((k, *v));
                }
            }
            match best {
                Some((k, v)) => {
                    let prev = x.clone();
                    x = cands[k].clone();
                    fx = v;
                    accept(self.evals, fx, &x);
                    // pattern move along the accepted direction
                    if self.evals < limit && fx > stop_below {
                        let y: Vec<f64> = x.iter().zip(&prev).map(|(a, b)| 2.0 * a - b).collect();
                        let v = f(self, &y);
                        self.evals += 1;
                        if v < fx - 1e-12 * fx.abs() {
                            x = y;
                            fx = v;
                            accept(self.evals, fx, &x);
                        }
                    }
                }
                None => step *= 0.5,
            }
        }
        (x, fx)
    }
}

/// Derivative-free minimization of `||M(:, cols)||_inf` over the free
/// parameters with a hard frozen-grid stability constraint.
pub fn synthesize(
    problem: &SynthesisProblem,
    init: &StructuredControllerParams,
    free: FreeSet,
    cols: &[usize],
    opts: &OptimizerOptions,
) -> Result<SynthesisResult> {
    let mut log = Vec::new();
    let mut res = synthesize_logged(problem, init, free, cols, opts, &mut log)?;
    res.log = log;
    Ok(res)
}

/// As [`synthesize`], appending incumbents to `log` as they are accepted so
/// that the history survives a failed run.
pub fn synthesize_logged(
    problem: &SynthesisProblem,
    init: &StructuredControllerParams,
    free: FreeSet,
    cols: &[usize],
    opts: &OptimizerOptions,
    log: &mut Vec<IterateRecord>,
) -> Result<SynthesisResult> {
    let t0 = Instant::now();
    problem.check_params(init)?;
    if opts.starts == 0 || !(opts.initial_step > 0.0) || !(opts.min_step > 0.0) {
        return Err(Error::param(
            "optimizer",
            "starts, initial_step and min_step must be positive",
        ));
    }
    let scaling = ParamScaling::new(init, free, problem.xi_scale());
    let hinf = HinfOptions {
        rel_tol: opts.search_tol,
        check_points: opts.search_check_points,
        method: HinfMethod::Hamiltonian,
        ..HinfOptions::default()
    };
    let mut search = Search {
        problem,
        scaling: scaling.clone(),
        cols,
        hinf,
        evals: 0,
    };
    let x0 = scaling.encode(init);
    let gamma_init = problem.objective(init, cols, &problem.hinf).0;
    let mut fx0 = search.gamma(&x0);
    search.evals += 1;
    if fx0.is_finite() {
        log.push(IterateRecord {
            evaluation: search.evals,
            start: 0,
            phase: Phase::Search,
            value: fx0,
        });
    }
    let mut x_start = x0.clone();

    if !fx0.is_finite() && opts.budget > 0 {
        let a0 = search.abscissa(&x0);
        let target = -2.0 * problem.stability_margin;
        let limit = opts.budget / 2;
        log.push(IterateRecord {
            evaluation: search.evals,
            start: 0,
            phase: Phase::Stabilize,
            value: a0,
        });
        let (xs, a) =
            search.pattern_search(x0.clone(), a0, limit, opts, true, target, |ev, v, _| {
                log.push(IterateRecord {
                    evaluation: ev,
                    start: 0,
                    phase: Phase::Stabilize,
                    value: v,
                });
            });
        if a >= -problem.stability_margin {
            return Err(Error::NoStabilizingPoint { best_abscissa: a });
        }
        x_start = xs;
        fx0 = search.gamma(&x_start);
        search.evals += 1;
        if fx0.is_finite() {
            log.push(IterateRecord {
                evaluation: search.evals,
                start: 0,
                phase: Phase::Search,
                value: fx0,
            });
        }
    }

    let mut best_x = x_start.clone();
    let mut best_f = fx0;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let normal = Normal::new(0.0, opts.perturbation.max(0.0))
        .map_err(|e| Error::param("perturbation", e.to_string()))?;
    let starts: Vec<Vec<f64>> = (0..opts.starts)
        .map(|s| {
            if s == 0 {
                x_start.clone()
            } else {
                x_start
                    .iter()
                    .map(|v| v + normal.sample(&mut rng))
                    .collect()
            }
        })
        .collect();
    for (s, xs) in starts.into_iter().enumerate() {
        if search.evals >= opts.budget {
            break;
        }
        let fs = if s == 0 {
            fx0
        } else {
            search.evals += 1;
            search.gamma(&xs)
        };
        if !fs.is_finite() {
            continue;
        }
        let remaining = opts.budget - search.evals;
        let limit = search.evals + remaining / (opts.starts - s);
        let mut incumbent = best_f;
        let mut inc_x = best_x.clone();
        let (x, f) =
            search.pattern_search(xs, fs, limit, opts, false, f64::NEG_INFINITY, |ev, v, x| {
                if v < incumbent {
                    incumbent = v;
                    inc_x = x.to_vec();
                    log.push(IterateRecord {
                        evaluation: ev,
                        start: s,
                        phase: Phase::Search,
                        value: v,
                    });
                }
            });
        if f < best_f {
            best_f = f;
            best_x = x;
        } else if incumbent < best_f {
            best_f = incumbent;
            best_x = inc_x;
        }
    }

    let best = scaling.decode(&best_x);
    let certificate = problem.grid_stability_check(&best)?;
    let gamma = if search.evals <= 1 {
        gamma_init
    } else {
        problem.objective(&best, cols, &problem.hinf).0
    };
    Ok(SynthesisResult {
        params: best.to_doc(),
        gamma,
        gamma_init,
        log: Vec::new(),
        certificate,
        evaluations: search.evals,
        n_params: scaling.dim(),
        free,
        objective_cols: cols.to_vec(),
        wall_time_s: t0.elapsed().as_secs_f64(),
        best,
    })
}
