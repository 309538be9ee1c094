//! Mechanical models with position-dependent actuation and sensing, their
//! modal form, and the rigid-body / flexible partition used for control design.

mod modal;
mod partition;
mod position_map;

pub use modal::{
    modal_decompose, modal_decompose_with, to_modal_ss, ModalDecomposition, ModalOptions,
};
pub use partition::{
    group_and_partition, grouping_permutation, ModeClass, ModeInfo, PartitionedModalModel,
};
pub use position_map::{MapEntry, PositionMap};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::statespace::StateSpaceModel;

/// `M q'' + D q' + K q = Phi_a(p) u`, `y = Phi_s(p) q`.
#[derive(Debug, Clone, PartialEq)]
pub struct MechanicalModel {
    pub name: String,
    pub m: DMatrix<f64>,
    pub d: DMatrix<f64>,
    pub k: DMatrix<f64>,
    pub phi_a: PositionMap,
    pub phi_s: PositionMap,
}

impl MechanicalModel {
    pub fn new(
        name: impl Into<String>,
        m: DMatrix<f64>,
        d: DMatrix<f64>,
        k: DMatrix<f64>,
        phi_a: PositionMap,
        phi_s: PositionMap,
    ) -> Result<Self> {
        let model = Self {
            name: name.into(),
            m,
            d,
            k,
            phi_a,
            phi_s,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn nq(&self) -> usize {
        self.m.nrows()
    }

    pub fn nu(&self) -> usize {
        self.phi_a.shape().1
    }

    pub fn ny(&self) -> usize {
        self.phi_s.shape().0
    }

    pub fn domain(&self) -> &[[f64; 2]] {
        self.phi_a.domain()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.m.nrows();
        for (mat, name) in [(&self.m, "M"), (&self.d, "D"), (&self.k, "K")] {
            if mat.shape() != (n, n) {
                return Err(Error::InvalidModel(format!("{name} must be {n}x{n}")));
            }
            if !linalg::all_finite(mat) {
                return Err(Error::InvalidModel(format!(
                    "{name} has non-finite entries"
                )));
            }
            let asym = (mat - mat.transpose()).norm();
            if asym > 1e-12 * mat.norm().max(1.0) {
                return Err(Error::InvalidModel(format!(
                    "{name} is not symmetric (asymmetry {asym:e})"
                )));
            }
        }
        if self.m.clone().cholesky().is_none() {
            return Err(Error::InvalidModel("M is not positive definite".into()));
        }
        for (mat, name) in [(&self.k, "K"), (&self.d, "D")] {
            if n > 0 {
                let min = mat.clone().symmetric_eigen().eigenvalues.min();
                if min < -1e-9 * mat.norm().max(f64::MIN_POSITIVE) {
                    return Err(Error::InvalidModel(format!(
                        "{name} is not positive semidefinite (eigenvalue {min:e})"
                    )));
                }
            }
        }
        if self.phi_a.shape().0 != n {
            return Err(Error::InvalidModel(format!("phi_a must have {n} rows")));
        }
        if self.phi_s.shape().1 != n {
            return Err(Error::InvalidModel(format!("phi_s must have {n} columns")));
        }
        if self.phi_a.domain() != self.phi_s.domain() {
            return Err(Error::InvalidModel(
                "phi_a and phi_s have different domains".into(),
            ));
        }
        Ok(())
    }

    /// True when neither map depends on the scheduling point.
    pub fn is_position_independent(&self) -> bool {
        self.phi_a.is_constant() && self.phi_s.is_constant()
    }

    /// Second-order form frozen at `p`, states `[q; q']`.
    pub fn evaluate_local(&self, p: &[f64]) -> Result<StateSpaceModel> {
        let n = self.nq();
        let pa = self.phi_a.eval(p)?;
        let ps = self.phi_s.eval(p)?;
        let minv = self.m.clone().cholesky().expect("validated").inverse();
        let mut a = DMatrix::zeros(2 * n, 2 * n);
        a.view_mut((0, n), (n, n))
            .copy_from(&DMatrix::identity(n, n));
        a.view_mut((n, 0), (n, n)).copy_from(&(-&minv * &self.k));
        a.view_mut((n, n), (n, n)).copy_from(&(-&minv * &self.d));
        let mut b = DMatrix::zeros(2 * n, self.nu());
        b.view_mut((n, 0), (n, self.nu())).copy_from(&(&minv * pa));
        let mut c = DMatrix::zeros(self.ny(), 2 * n);
        c.view_mut((0, 0), (self.ny(), n)).copy_from(&ps);
        StateSpaceModel::new(a, b, c, DMatrix::zeros(self.ny(), self.nu()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&MechanicalDoc::from(self)).expect("serializable")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let doc: MechanicalDoc =
            serde_path_to_error::deserialize(de).map_err(|e| Error::Config {
                path: e.path().to_string(),
                message: e.inner().to_string(),
            })?;
        doc.try_into()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MechanicalDoc {
    #[serde(default)]
    pub name: String,
    #[serde(rename = "M")]
    pub m: Vec<Vec<f64>>,
    #[serde(rename = "D")]
    pub d: Vec<Vec<f64>>,
    #[serde(rename = "K")]
    pub k: Vec<Vec<f64>>,
    pub phi_a: Vec<MapEntry>,
    pub phi_s: Vec<MapEntry>,
    pub domain: Vec<[f64; 2]>,
    /// Actuator count; inferred from `phi_a` entries when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_u: Option<usize>,
    /// Sensor count; inferred from `phi_s` entries when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_y: Option<usize>,
}

impl From<&MechanicalModel> for MechanicalDoc {
    fn from(m: &MechanicalModel) -> Self {
        Self {
            name: m.name.clone(),
            m: linalg::to_rows(&m.m),
            d: linalg::to_rows(&m.d),
            k: linalg::to_rows(&m.k),
            phi_a: m.phi_a.to_entries(),
            phi_s: m.phi_s.to_entries(),
            domain: m.domain().to_vec(),
            n_u: Some(m.nu()),
            n_y: Some(m.ny()),
        }
    }
}

impl TryFrom<MechanicalDoc> for MechanicalModel {
    type Error = Error;

    fn try_from(doc: MechanicalDoc) -> Result<Self> {
        let n = doc.m.len();
        let m = linalg::from_rows(&doc.m, 0, "M")?;
        let d = linalg::from_rows(&doc.d, n, "D")?;
        let k = linalg::from_rows(&doc.k, n, "K")?;
        let n_u = doc
            .n_u
            .unwrap_or_else(|| doc.phi_a.iter().map(|e| e.entry[1] + 1).max().unwrap_or(0));
        let n_y = doc
            .n_y
            .unwrap_or_else(|| doc.phi_s.iter().map(|e| e.entry[0] + 1).max().unwrap_or(0));
        let phi_a = PositionMap::from_entries(n, n_u, doc.domain.clone(), &doc.phi_a)?;
        let phi_s = PositionMap::from_entries(n_y, n, doc.domain.clone(), &doc.phi_s)?;
        MechanicalModel::new(doc.name, m, d, k, phi_a, phi_s)
    }
}
