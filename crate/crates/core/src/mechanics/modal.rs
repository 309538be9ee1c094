use nalgebra::DMatrix;

use super::MechanicalModel;
use crate::error::{Error, Result};
use crate::statespace::StateSpaceModel;

/// Modes with `omega < RIGID_BODY_RATIO * max(omega)` are rigid-body modes.
pub const RIGID_BODY_RATIO: f64 = 1e-6;

#[derive(Debug, Clone, Copy)]
pub struct ModalOptions {
    /// Discard off-diagonal modal damping instead of failing.
    pub force_diagonal: bool,
    /// Relative off-diagonal tolerance of the modal damping matrix.
    pub damping_tol: f64,
}

impl Default for ModalOptions {
    fn default() -> Self {
        Self {
            force_diagonal: false,
            damping_tol: 1e-8,
        }
    }
}

/// Mass-normalized eigenvectors, eigenfrequencies (rad/s) and modal damping ratios,
/// sorted by ascending eigenfrequency.
#[derive(Debug, Clone)]
pub struct ModalDecomposition {
    pub vtilde: DMatrix<f64>,
    pub omega: Vec<f64>,
    pub zeta: Vec<f64>,
    pub n_rb: usize,
    pub warnings: Vec<String>,
}

impl ModalDecomposition {
    pub fn omega_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&self.omega))
    }

    pub fn zeta_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&self.zeta))
    }

    pub fn n_modes(&self) -> usize {
        self.omega.len()
    }

    pub fn frequencies_hz(&self) -> Vec<f64> {
        self.omega
            .iter()
            .map(|w| w / (2.0 * std::f64::consts::PI))
            .collect()
    }
}

pub fn modal_decompose(model: &MechanicalModel) -> Result<ModalDecomposition> {
    modal_decompose_with(model, &ModalOptions::default())
}

pub fn modal_decompose_with(
    model: &MechanicalModel,
    opts: &ModalOptions,
) -> Result<ModalDecomposition> {
    let n = model.nq();
    let me = model.m.clone().symmetric_eigen();
    if me.eigenvalues.iter().any(|&v| v <= 0.0) {
        return Err(Error::InvalidModel("M is not positive definite".into()));
    }
    let inv_sqrt = DMatrix::from_diagonal(&me.eigenvalues.map(|v| 1.0 / v.sqrt()));
    let m_isqrt = &me.eigenvectors * inv_sqrt * me.eigenvectors.transpose();
    let mut kt = &m_isqrt * &model.k * &m_isqrt;
    kt = (&kt + kt.transpose()) * 0.5;
    let ke = kt.symmetric_eigen();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| ke.eigenvalues[i].total_cmp(&ke.eigenvalues[j]));
    let lam: Vec<f64> = order.iter().map(|&i| ke.eigenvalues[i].max(0.0)).collect();
    let v = DMatrix::from_fn(n, n, |r, c| ke.eigenvectors[(r, order[c])]);
    let mut vtilde = &m_isqrt * v;

    for j in 0..n {
        let col = vtilde.column(j);
        let max = col.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let lead = col
            .iter()
            .position(|x| x.abs() >= max * (1.0 - 1e-9))
            .unwrap_or(0);
        if vtilde[(lead, j)] < 0.0 {
            vtilde.column_mut(j).neg_mut();
        }
    }

    let wmax = lam.iter().copied().fold(0.0, f64::max).sqrt();
    let mut omega: Vec<f64> = lam.iter().map(|l| l.sqrt()).collect();
    let mut n_rb = 0;
    for w in omega.iter_mut() {
        if *w < RIGID_BODY_RATIO * wmax || wmax == 0.0 {
            *w = 0.0;
            n_rb += 1;
        }
    }

    let dm = vtilde.transpose() * &model.d * &vtilde;
    let mut off = dm.clone();
    off.fill_diagonal(0.0);
    let offdiag = off.norm();
    let relative = if dm.norm() > 0.0 {
        offdiag / dm.norm()
    } else {
        0.0
    };
    let mut warnings = Vec::new();
    if relative > opts.damping_tol {
        if !opts.force_diagonal {
            return Err(Error::NonProportionalDamping { offdiag, relative });
        }
        let msg =
            format!("non-proportional damping discarded (relative off-diagonal norm {relative:e})");
        log::warn!("{msg}");
        warnings.push(msg);
    }
    let mut zeta = vec![0.0; n];
    for j in 0..n {
        if omega[j] > 0.0 {
            zeta[j] = 0.5 * dm[(j, j)] / omega[j];
        } else if dm[(j, j)].abs() > 1e-12 * dm.norm().max(f64::MIN_POSITIVE) {
            let msg = format!(
                "rigid-body mode {j} has damping {:e} which is ignored",
                dm[(j, j)]
            );
            log::warn!("{msg}");
            warnings.push(msg);
        }
    }
    Ok(ModalDecomposition {
        vtilde,
        omega,
        zeta,
        n_rb,
        warnings,
    })
}

/// Modal state-space form frozen at `p`, states `[eta; eta']`.
pub fn to_modal_ss(
    dec: &ModalDecomposition,
    model: &MechanicalModel,
    p: &[f64],
) -> Result<StateSpaceModel> {
    let n = dec.n_modes();
    if n != model.nq() {
        return Err(Error::dim(
            "to_modal_ss",
            "decomposition does not match the model",
        ));
    }
    let pa = model.phi_a.eval(p)?;
    let ps = model.phi_s.eval(p)?;
    let mut a = DMatrix::zeros(2 * n, 2 * n);
    a.view_mut((0, n), (n, n)).fill_with_identity();
    for j in 0..n {
        a[(n + j, j)] = -dec.omega[j] * dec.omega[j];
        a[(n + j, n + j)] = -2.0 * dec.zeta[j] * dec.omega[j];
    }
    let mut b = DMatrix::zeros(2 * n, model.nu());
    b.view_mut((n, 0), (n, model.nu()))
        .copy_from(&(dec.vtilde.transpose() * pa));
    let mut c = DMatrix::zeros(model.ny(), 2 * n);
    c.view_mut((0, 0), (model.ny(), n))
        .copy_from(&(ps * &dec.vtilde));
    StateSpaceModel::new(a, b, c, DMatrix::zeros(model.ny(), model.nu()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanics::PositionMap;

    fn model(m: &[f64], k: &[f64], d: &[f64], n: usize) -> MechanicalModel {
        let dom = vec![[0.0, 1.0]];
        MechanicalModel::new(
            "t",
            DMatrix::from_row_slice(n, n, m),
            DMatrix::from_row_slice(n, n, d),
            DMatrix::from_row_slice(n, n, k),
            PositionMap::constant(DMatrix::identity(n, n), dom.clone()),
            PositionMap::constant(DMatrix::identity(n, n), dom),
        )
        .unwrap()
    }

    #[test]
    fn identity_case() {
        let dec =
            modal_decompose(&model(&[1., 0., 0., 1.], &[1., 0., 0., 1.], &[0.; 4], 2)).unwrap();
        assert!((dec.omega[0] - 1.0).abs() < 1e-14 && (dec.omega[1] - 1.0).abs() < 1e-14);
        let g = dec.vtilde.transpose() * &dec.vtilde;
        assert!((g - DMatrix::<f64>::identity(2, 2)).norm() < 1e-12);
    }

    #[test]
    fn free_free_pair() {
        let dec =
            modal_decompose(&model(&[1., 0., 0., 1.], &[1., -1., -1., 1.], &[0.; 4], 2)).unwrap();
        assert_eq!(dec.n_rb, 1);
        assert_eq!(dec.omega[0], 0.0);
        assert!((dec.omega[1] - 2f64.sqrt()).abs() < 1e-12);
        let s = 0.5f64.sqrt();
        assert!((dec.vtilde[(0, 0)] - s).abs() < 1e-12 && (dec.vtilde[(1, 0)] - s).abs() < 1e-12);
        assert!((dec.vtilde[(0, 1)] - s).abs() < 1e-12 && (dec.vtilde[(1, 1)] + s).abs() < 1e-12);
    }

    #[test]
    fn scalar_damping_ratio() {
        let dec = modal_decompose(&model(&[2.0], &[8.0], &[0.8], 1)).unwrap();
        assert!((dec.omega[0] - 2.0).abs() < 1e-14);
        assert!((dec.vtilde[(0, 0)] - 0.5f64.sqrt()).abs() < 1e-14);
        assert!((dec.zeta[0] - 0.1).abs() < 1e-14);
    }

    #[test]
    fn non_proportional_damping_needs_force() {
        let m = model(&[1., 0., 0., 1.], &[2., -1., -1., 2.], &[1., 0., 0., 0.], 2);
        assert!(matches!(
            modal_decompose(&m),
            Err(Error::NonProportionalDamping { .. })
        ));
        let dec = modal_decompose_with(
            &m,
            &ModalOptions {
                force_diagonal: true,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(dec.warnings.len(), 1);
    }

    #[test]
    fn single_mode_state_matrix() {
        let m = model(&[1.0], &[4.0], &[0.2], 1);
        let dec = modal_decompose(&m).unwrap();
        let g = to_modal_ss(&dec, &m, &[0.5]).unwrap();
        let expect = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -4.0, -0.2]);
        assert!((g.a() - expect).norm() < 1e-12);
    }
}
