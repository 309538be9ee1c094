//! Rigid-body and extended modal input decoupling.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::mechanics::PartitionedModalModel;
use crate::statespace::StateSpaceModel;

/// Static input/output transformations `G~ = T_y G T_u`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecouplingPair {
    pub t_u: DMatrix<f64>,
    pub t_y: DMatrix<f64>,
    /// Scheduling point the pair was computed at; `None` when the maps are constant.
    pub p_design: Option<Vec<f64>>,
    /// Number of flexible modes included in the input decoupling.
    pub n_flex: usize,
}

impl DecouplingPair {
    pub fn identity(nu: usize, ny: usize) -> Self {
        Self {
            t_u: DMatrix::identity(nu, nu),
            t_y: DMatrix::identity(ny, ny),
            p_design: None,
            n_flex: 0,
        }
    }

    pub fn n_ch(&self) -> usize {
        self.t_u.ncols()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&DecouplingDoc {
            t_u: linalg::to_rows(&self.t_u),
            t_y: linalg::to_rows(&self.t_y),
            p_design: self.p_design.clone(),
            n_flex: self.n_flex,
        })
        .expect("serializable")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: DecouplingDoc = serde_json::from_str(text)?;
        let t_u = linalg::from_rows(&doc.t_u, 0, "T_u")?;
        let t_y = linalg::from_rows(&doc.t_y, 0, "T_y")?;
        Ok(Self {
            t_u,
            t_y,
            p_design: doc.p_design,
            n_flex: doc.n_flex,
        })
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DecouplingDoc {
    #[serde(rename = "T_u")]
    t_u: Vec<Vec<f64>>,
    #[serde(rename = "T_y")]
    t_y: Vec<Vec<f64>>,
    p_design: Option<Vec<f64>>,
    #[serde(default)]
    n_flex: usize,
}

/// Velocity rows of a grouped input block: `(I (x) [0 1]) B`.
pub fn velocity_rows(b: &DMatrix<f64>) -> DMatrix<f64> {
    let idx: Vec<usize> = (0..b.nrows() / 2).map(|k| 2 * k + 1).collect();
    b.select_rows(&idx)
}

/// Position columns of a grouped output block: `C (I (x) [1 0])'`.
pub fn position_cols(c: &DMatrix<f64>) -> DMatrix<f64> {
    let idx: Vec<usize> = (0..c.ncols() / 2).map(|k| 2 * k).collect();
    c.select_columns(&idx)
}

fn design_point(pm: &PartitionedModalModel, p: &[f64]) -> Option<Vec<f64>> {
    if pm.is_position_independent() {
        None
    } else {
        Some(p.to_vec())
    }
}

pub fn rb_decoupling(pm: &PartitionedModalModel, p: &[f64]) -> Result<DecouplingPair> {
    let bv = velocity_rows(&pm.b_rb.eval(p)?);
    let cp = position_cols(&pm.c_rb.eval(p)?);
    let t_u = linalg::pinv_full_rank(&bv, true, "rigid-body input matrix")?;
    let t_y = linalg::pinv_full_rank(&cp, false, "rigid-body output matrix")?;
    Ok(DecouplingPair {
        t_u,
        t_y,
        p_design: design_point(pm, p),
        n_flex: 0,
    })
}

/// Input decoupling extended to the first `n_flex` retained flexible modes.
pub fn extended_input_decoupling(
    pm: &PartitionedModalModel,
    p: &[f64],
    n_flex: usize,
) -> Result<DecouplingPair> {
    let n_u = pm.nu();
    if n_u < pm.n_rb + n_flex {
        return Err(Error::InsufficientActuators {
            n_inputs: n_u,
            n_rb: pm.n_rb,
            n_flex,
        });
    }
    if n_flex > pm.n_flex {
        return Err(Error::ModeSelection(format!(
            "{n_flex} flexible modes requested, {} retained",
            pm.n_flex
        )));
    }
    let rb = rb_decoupling(pm, p)?;
    if n_flex == 0 {
        return Ok(rb);
    }
    let b_rb = velocity_rows(&pm.b_rb.eval(p)?);
    let b_fm = velocity_rows(&pm.b_fm_r.eval(p)?)
        .rows(0, n_flex)
        .clone_owned();
    let mut stacked = DMatrix::zeros(pm.n_rb + n_flex, n_u);
    stacked.view_mut((0, 0), b_rb.shape()).copy_from(&b_rb);
    stacked
        .view_mut((pm.n_rb, 0), b_fm.shape())
        .copy_from(&b_fm);
    let t_u = linalg::pinv_full_rank(&stacked, true, "stacked rigid-body/flexible input matrix")?;
    Ok(DecouplingPair {
        t_u,
        t_y: rb.t_y,
        p_design: rb.p_design,
        n_flex,
    })
}

pub fn apply_decoupling(g: &StateSpaceModel, pair: &DecouplingPair) -> Result<StateSpaceModel> {
    g.scale_io(&pair.t_y, &pair.t_u)
}

/// Residuals of a pair against the maps at `p`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DecouplingCheck {
    /// `max |B_stacked T_u - I|`.
    pub input_residual: f64,
    /// `max |T_y C_RB - I|`.
    pub output_residual: f64,
    /// Largest entry of the retained flexible rows in the rigid-body input columns.
    pub flex_leakage: f64,
}

pub fn check_decoupling(
    pm: &PartitionedModalModel,
    p: &[f64],
    pair: &DecouplingPair,
) -> Result<DecouplingCheck> {
    let b_rb = velocity_rows(&pm.b_rb.eval(p)?);
    let b_fm = velocity_rows(&pm.b_fm_r.eval(p)?);
    let cp = position_cols(&pm.c_rb.eval(p)?);
    let k = pm.n_rb + pair.n_flex;
    let mut stacked = DMatrix::zeros(k, pm.nu());
    stacked.view_mut((0, 0), b_rb.shape()).copy_from(&b_rb);
    stacked
        .view_mut((pm.n_rb, 0), (pair.n_flex, pm.nu()))
        .copy_from(&b_fm.rows(0, pair.n_flex));
    let input_residual = (&stacked * &pair.t_u - DMatrix::<f64>::identity(k, k)).amax();
    let output_residual = (&pair.t_y * cp - DMatrix::<f64>::identity(pm.n_rb, pm.n_rb)).amax();
    let flex_leakage = if b_fm.nrows() == 0 {
        0.0
    } else {
        (&b_fm * pair.t_u.columns(0, pm.n_rb)).amax()
    };
    Ok(DecouplingCheck {
        input_residual,
        output_residual,
        flex_leakage,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchplant::make_two_mass;
    use crate::mechanics::{group_and_partition, modal_decompose};

    #[test]
    fn two_mass_extended_pair_is_exact_inverse() {
        let m = make_two_mass();
        let dec = modal_decompose(&m).unwrap();
        let pm = group_and_partition(&dec, &m, 1, &[1]).unwrap();
        let pair = extended_input_decoupling(&pm, &[0.3], 1).unwrap();
        let s = 0.5f64.sqrt();
        let expect = DMatrix::from_row_slice(2, 2, &[s, s, s, -s]);
        assert!((&pair.t_u - expect).norm() < 1e-12);
        assert!((pair.t_y[(0, 0)] - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn too_many_flexible_modes() {
        let m = make_two_mass();
        let dec = modal_decompose(&m).unwrap();
        let pm = group_and_partition(&dec, &m, 1, &[1]).unwrap();
        assert!(matches!(
            extended_input_decoupling(&pm, &[0.0], 2),
            Err(Error::InsufficientActuators { .. })
        ));
    }
}
