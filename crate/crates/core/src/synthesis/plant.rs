use serde::Serialize;

use crate::benchplant::BenchmarkSpec;
use crate::decoupling::{apply_decoupling, extended_input_decoupling, DecouplingPair};
use crate::error::{Error, Result};
use crate::mechanics::{
    group_and_partition, modal_decompose, MechanicalModel, PartitionedModalModel,
};
use crate::observer::{truncate_with_compliance, TruncatedModel};
use crate::statespace::StateSpaceModel;

/// Modal plant decoupled at the design point, with its scheduling grid.
#[derive(Debug, Clone)]
pub struct DesignPlant {
    pub name: String,
    pub pm: PartitionedModalModel,
    pub pair: DecouplingPair,
    pub p_star: Vec<f64>,
    pub grid: Vec<Vec<f64>>,
    /// Full-order decoupled model at `p_star`.
    pub nominal: StateSpaceModel,
    /// Truncated, compliance-corrected decoupled model at `p_star`.
    pub truncated: TruncatedModel,
}

#[derive(Debug, Clone, Serialize)]
pub struct PlantSummary {
    pub name: String,
    pub n_rb: usize,
    pub n_flex: usize,
    pub n_disc: usize,
    pub p_star: Vec<f64>,
    pub grid_points: usize,
    pub flexible_hz: Vec<f64>,
}

impl DesignPlant {
    pub fn new(
        model: &MechanicalModel,
        n_rb: usize,
        retain: &[usize],
        p_star: &[f64],
        grid: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if grid.is_empty() {
            return Err(Error::param(
                "grid",
                "at least one scheduling point is required",
            ));
        }
        let dec = modal_decompose(model)?;
        let pm = group_and_partition(&dec, model, n_rb, retain)?;
        let pair = extended_input_decoupling(&pm, p_star, pm.n_flex)?;
        let nominal = apply_decoupling(&pm.evaluate_local(p_star)?, &pair)?;
        let truncated = truncate_with_compliance(&pm, p_star)?.decoupled(&pair)?;
        Ok(Self {
            name: model.name.clone(),
            pm,
            pair,
            p_star: p_star.to_vec(),
            grid,
            nominal,
            truncated,
        })
    }

    pub fn from_benchmark(spec: &BenchmarkSpec) -> Result<Self> {
        Self::new(
            &spec.model,
            spec.n_rb,
            &spec.retain,
            &spec.p_star,
            spec.grid.clone(),
        )
    }

    pub fn n_rb(&self) -> usize {
        self.pm.n_rb
    }

    pub fn n_flex(&self) -> usize {
        self.pm.n_flex
    }

    /// Full-order frozen model at `p` in the design coordinates.
    pub fn local(&self, p: &[f64]) -> Result<StateSpaceModel> {
        apply_decoupling(&self.pm.evaluate_local(p)?, &self.pair)
    }

    pub fn locals(&self) -> Result<Vec<StateSpaceModel>> {
        self.grid.iter().map(|p| self.local(p)).collect()
    }

    /// Retained flexible angular frequencies (rad/s).
    pub fn flexible_omegas(&self) -> Vec<f64> {
        self.pm.retained_modes().map(|m| m.omega).collect()
    }

    pub fn flexible_zetas(&self) -> Vec<f64> {
        self.pm.retained_modes().map(|m| m.zeta).collect()
    }

    pub fn summary(&self) -> PlantSummary {
        PlantSummary {
            name: self.name.clone(),
            n_rb: self.pm.n_rb,
            n_flex: self.pm.n_flex,
            n_disc: self.pm.n_disc,
            p_star: self.p_star.clone(),
            grid_points: self.grid.len(),
            flexible_hz: self
                .flexible_omegas()
                .iter()
                .map(|w| w / (2.0 * std::f64::consts::PI))
                .collect(),
        }
    }
}
