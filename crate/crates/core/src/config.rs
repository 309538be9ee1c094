//! Run configuration for the command-line front end.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::TimeDomainOptions;
use crate::benchplant::{self, BenchmarkSpec};
use crate::error::{Error, Result};
use crate::linalg;
use crate::mechanics::{modal_decompose, MechanicalModel};
use crate::shaping::{FlexWeight, ShapingParams};
use crate::synthesis::{DesignPlant, OptimizerOptions};

/// Scheduling grid: points per axis over the model domain, or explicit points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    PerAxis(usize),
    Points(Vec<Vec<f64>>),
}

impl GridSpec {
    pub fn points(&self, domain: &[[f64; 2]]) -> Result<Vec<Vec<f64>>> {
        match self {
            GridSpec::PerAxis(n) => {
                if *n == 0 {
                    return Err(Error::Config {
                        path: "grid".into(),
                        message: "need at least one point per axis".into(),
                    });
                }
                let axes: Vec<Vec<f64>> = domain
                    .iter()
                    .map(|d| {
                        if *n == 1 {
                            vec![0.5 * (d[0] + d[1])]
                        } else {
                            linalg::linspace(d[0], d[1], *n)
                        }
                    })
                    .collect();
                let mut pts = vec![Vec::new()];
                for axis in &axes {
                    pts = pts
                        .into_iter()
                        .flat_map(|p: Vec<f64>| {
                            axis.iter().map(move |&v| {
                                let mut q = p.clone();
                                q.push(v);
                                q
                            })
                        })
                        .collect();
                }
                Ok(pts)
            }
            GridSpec::Points(p) => {
                if p.is_empty() || p.iter().any(|q| q.len() != domain.len()) {
                    return Err(Error::Config {
                        path: "grid".into(),
                        message: format!(
                            "need a non-empty list of {}-dimensional points",
                            domain.len()
                        ),
                    });
                }
                Ok(p.clone())
            }
        }
    }
}

/// Frequency grid (Hz) for exported magnitude curves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FreqGrid {
    pub f_min: f64,
    pub f_max: f64,
    pub points: usize,
}

impl Default for FreqGrid {
    fn default() -> Self {
        Self {
            f_min: 0.1,
            f_max: 1000.0,
            points: 400,
        }
    }
}

impl FreqGrid {
    pub fn freqs(&self) -> Result<Vec<f64>> {
        if !(self.f_min > 0.0) || !(self.f_max > self.f_min) || self.points < 2 {
            return Err(Error::Config {
                path: "frequency".into(),
                message: "need 0 < f_min < f_max and points >= 2".into(),
            });
        }
        Ok(linalg::logspace(
            self.f_min.log10(),
            self.f_max.log10(),
            self.points,
        ))
    }
}

/// Observer initialization by a Riccati design with `Q = care_q I`, `V = care_v I`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ObserverInit {
    pub care_q: f64,
    pub care_v: f64,
}

impl Default for ObserverInit {
    fn default() -> Self {
        Self {
            care_q: 1.0,
            care_v: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Benchmark name (`two_mass`, `mmpa_lite`) or path to a model JSON file.
    pub model: String,
    /// Rigid-body mode count for model files; detected from the spectrum when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_rb: Option<usize>,
    /// Retained flexible modal indices for model files.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retain: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_star: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shaping: Option<ShapingParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_error: Option<Vec<f64>>,
    #[serde(default)]
    pub observer: ObserverInit,
    #[serde(default = "conventional_defaults")]
    pub conventional: OptimizerOptions,
    #[serde(default)]
    pub proposed: OptimizerOptions,
    /// Overrides the optimizer and disturbance seeds when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub time_domain: TimeDomainOptions,
    #[serde(default)]
    pub frequency: FreqGrid,
    /// Frozen models used by the scheduled simulation.
    #[serde(default = "default_levels")]
    pub levels: usize,
}

fn conventional_defaults() -> OptimizerOptions {
    OptimizerOptions {
        budget: 1500,
        ..OptimizerOptions::default()
    }
}

fn default_levels() -> usize {
    101
}

impl RunConfig {
    pub fn for_model(model: impl Into<String>) -> Self {
        Self {
            model: model.into(),
            n_rb: None,
            retain: None,
            p_star: None,
            grid: None,
            shaping: None,
            expected_error: None,
            observer: ObserverInit::default(),
            conventional: conventional_defaults(),
            proposed: OptimizerOptions::default(),
            seed: None,
            time_domain: TimeDomainOptions::default(),
            frequency: FreqGrid::default(),
            levels: default_levels(),
        }
    }

    /// Parses JSON, reporting the path of the offending key on failure.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::Config {
                path,
                message: e.into_inner().to_string(),
            }
        })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    pub fn set_budget(&mut self, budget: usize) {
        self.conventional.budget = budget;
        self.proposed.budget = budget;
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.seed = Some(seed);
    }

    pub fn conventional_options(&self) -> OptimizerOptions {
        OptimizerOptions {
            seed: self.seed.unwrap_or(self.conventional.seed),
            ..self.conventional.clone()
        }
    }

    pub fn proposed_options(&self) -> OptimizerOptions {
        OptimizerOptions {
            seed: self.seed.unwrap_or(self.proposed.seed),
            ..self.proposed.clone()
        }
    }

    pub fn time_domain_options(&self) -> TimeDomainOptions {
        TimeDomainOptions {
            seed: self.seed.unwrap_or(self.time_domain.seed),
            ..self.time_domain.clone()
        }
    }

    /// Resolves the model, design point, grid and weights.
    pub fn resolve(&self) -> Result<ResolvedConfig> {
        let spec = self.benchmark()?;
        let domain = spec.model.domain().to_vec();
        let p_star = match &self.p_star {
            Some(p) => p.clone(),
            None => spec.p_star.clone(),
        };
        if p_star.len() != domain.len() {
            return Err(Error::Config {
                path: "p_star".into(),
                message: format!(
                    "{} coordinates given, the model has {}",
                    p_star.len(),
                    domain.len()
                ),
            });
        }
        let grid = match &self.grid {
            Some(g) => g.points(&domain)?,
            None => spec.grid.clone(),
        };
        let shaping = match &self.shaping {
            Some(s) => s.clone(),
            None => default_shaping(&spec),
        };
        shaping.validate().map_err(|e| Error::Config {
            path: "shaping".into(),
            message: e.to_string(),
        })?;
        if shaping.f_bw.len() != spec.n_rb {
            return Err(Error::Config {
                path: "shaping.f_bw".into(),
                message: format!(
                    "{} entries for {} rigid-body channels",
                    shaping.f_bw.len(),
                    spec.n_rb
                ),
            });
        }
        if shaping.flex.len() != spec.n_flex {
            return Err(Error::Config {
                path: "shaping.flex".into(),
                message: format!(
                    "{} entries for {} retained flexible modes",
                    shaping.flex.len(),
                    spec.n_flex
                ),
            });
        }
        let expected_error = self
            .expected_error
            .clone()
            .unwrap_or_else(|| vec![1e-6; spec.n_rb]);
        if expected_error.len() != spec.n_rb {
            return Err(Error::Config {
                path: "expected_error".into(),
                message: "one entry per rigid-body channel".into(),
            });
        }
        let spec = BenchmarkSpec {
            p_star,
            grid,
            ..spec
        };
        Ok(ResolvedConfig {
            spec,
            shaping,
            expected_error,
        })
    }

    fn benchmark(&self) -> Result<BenchmarkSpec> {
        if let Ok(spec) = benchplant::by_name(&self.model) {
            if self.n_rb.is_some() || self.retain.is_some() {
                return Err(Error::Config {
                    path: "model".into(),
                    message: "n_rb/retain apply only to model files".into(),
                });
            }
            return Ok(spec);
        }
        let path = PathBuf::from(&self.model);
        if !path.exists() {
            return Err(Error::Config {
                path: "model".into(),
                message: format!(
                    "`{}` is neither a benchmark name nor an existing file",
                    self.model
                ),
            });
        }
        let model = load_model(&path)?;
        spec_for_model(model, self.n_rb, self.retain.clone())
    }
}

pub fn load_model(path: &Path) -> Result<MechanicalModel> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    MechanicalModel::from_json(&text)
}

/// Benchmark-like design data for an arbitrary model: every flexible mode the
/// actuators can decouple is retained by default, the design point is the
/// domain center and the grid has 11 points per axis.
pub fn spec_for_model(
    model: MechanicalModel,
    n_rb: Option<usize>,
    retain: Option<Vec<usize>>,
) -> Result<BenchmarkSpec> {
    let dec = modal_decompose(&model)?;
    let n_rb = n_rb.unwrap_or(dec.n_rb);
    let retain = retain.unwrap_or_else(|| {
        let room = model.nu().saturating_sub(n_rb);
        (n_rb..dec.n_modes()).take(room).collect()
    });
    let domain = model.domain().to_vec();
    let p_star = domain.iter().map(|d| 0.5 * (d[0] + d[1])).collect();
    let grid = GridSpec::PerAxis(if domain.len() == 1 { 11 } else { 5 }).points(&domain)?;
    let f = dec.frequencies_hz();
    let first_flex = retain.first().map_or(100.0, |&k| f[k]);
    Ok(BenchmarkSpec {
        name: model.name.clone(),
        n_flex: retain.len(),
        f_bw: vec![first_flex / 5.0; n_rb],
        retain,
        n_rb,
        p_star,
        grid,
        model,
    })
}

/// Weights used when a configuration gives none: bandwidth from the
/// benchmark, damping weights at the retained modes.
pub fn default_shaping(spec: &BenchmarkSpec) -> ShapingParams {
    let f = modal_decompose(&spec.model)
        .map(|d| d.frequencies_hz())
        .unwrap_or_default();
    let eps = match spec.name.as_str() {
        "two_mass" => 4e-5,
        "mmpa_lite" => 1e-4,
        _ => 1.0,
    };
    let flex = spec
        .retain
        .iter()
        .map(|&k| FlexWeight {
            eps,
            ..FlexWeight::at(f.get(k).copied().unwrap_or(1.0))
        })
        .collect();
    ShapingParams::new(spec.f_bw.clone(), flex)
}

#[derive(Debug, Clone)]
pub struct ResolvedConfig {
    pub spec: BenchmarkSpec,
    pub shaping: ShapingParams,
    pub expected_error: Vec<f64>,
}

impl ResolvedConfig {
    pub fn plant(&self) -> Result<DesignPlant> {
        DesignPlant::from_benchmark(&self.spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_key_reports_path() {
        let e =
            RunConfig::from_json(r#"{"model": "two_mass", "proposed": {"budgt": 3}}"#).unwrap_err();
        match e {
            Error::Config { path, .. } => assert_eq!(path, "proposed.budgt"),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn grid_per_axis_is_a_product() {
        let pts = GridSpec::PerAxis(3)
            .points(&[[0.0, 1.0], [0.0, 2.0]])
            .unwrap();
        assert_eq!(pts.len(), 9);
        assert_eq!(pts[5], vec![0.5, 2.0]);
    }

    #[test]
    fn benchmark_defaults_resolve() {
        let r = RunConfig::for_model("two_mass").resolve().unwrap();
        assert_eq!(r.spec.grid.len(), 11);
        assert_eq!(r.shaping.flex.len(), 1);
        assert_eq!(r.shaping.flex[0].eps, 4e-5);
    }
}
