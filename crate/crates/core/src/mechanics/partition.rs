use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{MechanicalModel, ModalDecomposition, PositionMap};
use crate::error::{Error, Result};
use crate::linalg;
use crate::statespace::StateSpaceModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeClass {
    RigidBody,
    Retained,
    Discarded,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeInfo {
    /// Index in the ascending modal ordering.
    pub index: usize,
    pub omega: f64,
    pub zeta: f64,
    pub class: ModeClass,
}

/// Modal model with states grouped per mode as `(position, velocity)` pairs and
/// split into rigid-body, retained flexible and discarded flexible blocks.
#[derive(Debug, Clone)]
pub struct PartitionedModalModel {
    pub a_rb: DMatrix<f64>,
    pub a_fm_r: DMatrix<f64>,
    pub a_fm_d: DMatrix<f64>,
    pub b_rb: PositionMap,
    pub b_fm_r: PositionMap,
    pub b_fm_d: PositionMap,
    pub c_rb: PositionMap,
    pub c_fm_r: PositionMap,
    pub c_fm_d: PositionMap,
    pub n_rb: usize,
    pub n_flex: usize,
    pub n_disc: usize,
    /// Rigid-body modes first, then retained, then discarded.
    pub modes: Vec<ModeInfo>,
}

/// Permutation `T` with `z = T x`, mapping `[eta; eta']` to `[eta_1, eta_1', eta_2, eta_2', ...]`.
pub fn grouping_permutation(n: usize) -> DMatrix<f64> {
    let mut t = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        t[(2 * i, i)] = 1.0;
        t[(2 * i + 1, n + i)] = 1.0;
    }
    t
}

pub fn group_and_partition(
    dec: &ModalDecomposition,
    model: &MechanicalModel,
    n_rb: usize,
    retain: &[usize],
) -> Result<PartitionedModalModel> {
    let n = dec.n_modes();
    if n != model.nq() {
        return Err(Error::dim(
            "group_and_partition",
            "decomposition does not match the model",
        ));
    }
    if n_rb != dec.n_rb {
        return Err(Error::ModeSelection(format!(
            "n_RB = {n_rb} but the model has {} zero eigenfrequencies",
            dec.n_rb
        )));
    }
    let mut retained: Vec<usize> = retain.to_vec();
    retained.sort_unstable();
    retained.dedup();
    for &r in &retained {
        if r >= n {
            return Err(Error::ModeSelection(format!(
                "mode {r} does not exist ({n} modes)"
            )));
        }
        if r < n_rb {
            return Err(Error::ModeSelection(format!(
                "mode {r} is a rigid-body mode and cannot be retained as flexible"
            )));
        }
    }
    let rb: Vec<usize> = (0..n_rb).collect();
    let discarded: Vec<usize> = (n_rb..n).filter(|m| !retained.contains(m)).collect();

    let block_a = |modes: &[usize]| {
        let blocks: Vec<DMatrix<f64>> = modes
            .iter()
            .map(|&m| {
                let w = dec.omega[m];
                DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -w * w, -2.0 * dec.zeta[m] * w])
            })
            .collect();
        linalg::block_diag(&blocks.iter().collect::<Vec<_>>())
    };
    // Velocity rows of B: v_m' Phi_a(p); position columns of C: Phi_s(p) v_m.
    let b_sel = |modes: &[usize]| {
        let mut s = DMatrix::zeros(2 * modes.len(), n);
        for (j, &m) in modes.iter().enumerate() {
            s.row_mut(2 * j + 1)
                .copy_from(&dec.vtilde.column(m).transpose());
        }
        s
    };
    let c_sel = |modes: &[usize]| {
        let mut s = DMatrix::zeros(n, 2 * modes.len());
        for (j, &m) in modes.iter().enumerate() {
            s.column_mut(2 * j).copy_from(&dec.vtilde.column(m));
        }
        s
    };
    let info = |m: usize, class| ModeInfo {
        index: m,
        omega: dec.omega[m],
        zeta: dec.zeta[m],
        class,
    };
    let modes = rb
        .iter()
        .map(|&m| info(m, ModeClass::RigidBody))
        .chain(retained.iter().map(|&m| info(m, ModeClass::Retained)))
        .chain(discarded.iter().map(|&m| info(m, ModeClass::Discarded)))
        .collect();

    Ok(PartitionedModalModel {
        a_rb: block_a(&rb),
        a_fm_r: block_a(&retained),
        a_fm_d: block_a(&discarded),
        b_rb: model.phi_a.left_mul(&b_sel(&rb))?,
        b_fm_r: model.phi_a.left_mul(&b_sel(&retained))?,
        b_fm_d: model.phi_a.left_mul(&b_sel(&discarded))?,
        c_rb: model.phi_s.right_mul(&c_sel(&rb))?,
        c_fm_r: model.phi_s.right_mul(&c_sel(&retained))?,
        c_fm_d: model.phi_s.right_mul(&c_sel(&discarded))?,
        n_rb,
        n_flex: retained.len(),
        n_disc: discarded.len(),
        modes,
    })
}

impl PartitionedModalModel {
    pub fn nu(&self) -> usize {
        self.b_rb.shape().1
    }

    pub fn ny(&self) -> usize {
        self.c_rb.shape().0
    }

    pub fn domain(&self) -> &[[f64; 2]] {
        self.b_rb.domain()
    }

    pub fn retained_modes(&self) -> impl Iterator<Item = &ModeInfo> {
        self.modes.iter().filter(|m| m.class == ModeClass::Retained)
    }

    pub fn is_position_independent(&self) -> bool {
        [
            &self.b_rb,
            &self.b_fm_r,
            &self.b_fm_d,
            &self.c_rb,
            &self.c_fm_r,
            &self.c_fm_d,
        ]
        .iter()
        .all(|m| m.is_constant())
    }

    /// All blocks frozen at `p`, states `[RB; retained; discarded]`.
    pub fn evaluate_local(&self, p: &[f64]) -> Result<StateSpaceModel> {
        let a = linalg::block_diag(&[&self.a_rb, &self.a_fm_r, &self.a_fm_d]);
        let b = vstack(&[
            self.b_rb.eval(p)?,
            self.b_fm_r.eval(p)?,
            self.b_fm_d.eval(p)?,
        ]);
        let c = hstack(&[
            self.c_rb.eval(p)?,
            self.c_fm_r.eval(p)?,
            self.c_fm_d.eval(p)?,
        ]);
        StateSpaceModel::new(a, b, c, DMatrix::zeros(self.ny(), self.nu()))
    }

    /// Rigid-body and retained blocks only, without any static correction.
    pub fn evaluate_retained(&self, p: &[f64]) -> Result<StateSpaceModel> {
        let a = linalg::block_diag(&[&self.a_rb, &self.a_fm_r]);
        let b = vstack(&[self.b_rb.eval(p)?, self.b_fm_r.eval(p)?]);
        let c = hstack(&[self.c_rb.eval(p)?, self.c_fm_r.eval(p)?]);
        StateSpaceModel::new(a, b, c, DMatrix::zeros(self.ny(), self.nu()))
    }

    /// Discarded flexible block frozen at `p`.
    pub fn evaluate_discarded(&self, p: &[f64]) -> Result<StateSpaceModel> {
        StateSpaceModel::new(
            self.a_fm_d.clone(),
            self.b_fm_d.eval(p)?,
            self.c_fm_d.eval(p)?,
            DMatrix::zeros(self.ny(), self.nu()),
        )
    }
}

pub(crate) fn vstack(parts: &[DMatrix<f64>]) -> DMatrix<f64> {
    let cols = parts.iter().map(|m| m.ncols()).max().unwrap_or(0);
    let rows = parts.iter().map(|m| m.nrows()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut r = 0;
    for m in parts {
        if m.nrows() > 0 {
            out.view_mut((r, 0), m.shape()).copy_from(m);
        }
        r += m.nrows();
    }
    out
}

pub(crate) fn hstack(parts: &[DMatrix<f64>]) -> DMatrix<f64> {
    let rows = parts.iter().map(|m| m.nrows()).max().unwrap_or(0);
    let cols = parts.iter().map(|m| m.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut c = 0;
    for m in parts {
        if m.ncols() > 0 {
            out.view_mut((0, c), m.shape()).copy_from(m);
        }
        c += m.ncols();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grouping_is_a_permutation() {
        for n in 1..6 {
            let t = grouping_permutation(n);
            for i in 0..2 * n {
                assert_eq!(t.row(i).iter().filter(|v| **v == 1.0).count(), 1);
                assert_eq!(t.column(i).iter().filter(|v| **v == 1.0).count(), 1);
            }
            assert_eq!(&t * t.transpose(), DMatrix::identity(2 * n, 2 * n));
        }
    }
}
