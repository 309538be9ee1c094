//! Continuous-time state-space numerics.
//!
//! [`StateSpaceModel`] is the common currency of the crate: mechanical models,
//! filters, observers and closed-loop maps all end up as `(A, B, C, D)`
//! quadruples. The submodules add interconnection, frequency response,
//! H-infinity norm evaluation, Riccati solving and zero-order-hold simulation.

mod freq;
mod hinf;
mod interconnect;
mod riccati;
mod simulate;

pub use freq::{freq_response, FrequencyEvaluator, FrequencyResponse};
pub use hinf::{hinf_norm, hinf_norm_grid, hinf_norm_with, HinfMethod, HinfNorm, HinfOptions};
pub use interconnect::{append, feedback, parallel, series, Diagram};
pub use riccati::{care_solve, lyapunov_solve, riccati_residual, CareSolution};
pub use simulate::{simulate, simulate_from, zoh_discretize, DiscreteModel, Trajectory};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// `dx/dt = A x + B u`, `y = C x + D u`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpaceModel {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
    d: DMatrix<f64>,
    input_labels: Option<Vec<String>>,
    output_labels: Option<Vec<String>>,
}

impl StateSpaceModel {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>, d: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::dim(
                "state-space",
                format!("A is {}x{}", n, a.ncols()),
            ));
        }
        if b.nrows() != n {
            return Err(Error::dim(
                "state-space",
                format!("B has {} rows, A has {}", b.nrows(), n),
            ));
        }
        if c.ncols() != n {
            return Err(Error::dim(
                "state-space",
                format!("C has {} cols, A has {}", c.ncols(), n),
            ));
        }
        if d.nrows() != c.nrows() || d.ncols() != b.ncols() {
            return Err(Error::dim(
                "state-space",
                format!(
                    "D is {}x{}, expected {}x{}",
                    d.nrows(),
                    d.ncols(),
                    c.nrows(),
                    b.ncols()
                ),
            ));
        }
        for (m, name) in [(&a, "A"), (&b, "B"), (&c, "C"), (&d, "D")] {
            if !linalg::all_finite(m) {
                return Err(Error::NonFinite(match name {
                    "A" => "state-space A",
                    "B" => "state-space B",
                    "C" => "state-space C",
                    _ => "state-space D",
                }));
            }
        }
        Ok(Self {
            a,
            b,
            c,
            d,
            input_labels: None,
            output_labels: None,
        })
    }

    /// Static gain `y = D u`.
    pub fn gain(d: DMatrix<f64>) -> Self {
        let (ny, nu) = d.shape();
        Self::new(
            DMatrix::zeros(0, 0),
            DMatrix::zeros(0, nu),
            DMatrix::zeros(ny, 0),
            d,
        )
        .expect("static gain is always consistent")
    }

    pub fn identity(n: usize) -> Self {
        Self::gain(DMatrix::identity(n, n))
    }

    pub fn zero(ny: usize, nu: usize) -> Self {
        Self::gain(DMatrix::zeros(ny, nu))
    }

    pub fn with_labels(mut self, inputs: Vec<String>, outputs: Vec<String>) -> Result<Self> {
        if inputs.len() != self.nu() || outputs.len() != self.ny() {
            return Err(Error::dim(
                "labels",
                "label count does not match channel count",
            ));
        }
        self.input_labels = Some(inputs);
        self.output_labels = Some(outputs);
        Ok(self)
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }
    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }
    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }
    pub fn d(&self) -> &DMatrix<f64> {
        &self.d
    }
    pub fn nx(&self) -> usize {
        self.a.nrows()
    }
    pub fn nu(&self) -> usize {
        self.b.ncols()
    }
    pub fn ny(&self) -> usize {
        self.c.nrows()
    }
    pub fn input_labels(&self) -> Option<&[String]> {
        self.input_labels.as_deref()
    }
    pub fn output_labels(&self) -> Option<&[String]> {
        self.output_labels.as_deref()
    }

    pub fn into_parts(self) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
        (self.a, self.b, self.c, self.d)
    }

    pub fn poles(&self) -> Result<Vec<num_complex::Complex64>> {
        linalg::eigenvalues(&self.a)
    }

    pub fn spectral_abscissa(&self) -> Result<f64> {
        linalg::spectral_abscissa(&self.a)
    }

    /// True iff every eigenvalue of A has real part below `-margin`.
    pub fn is_hurwitz(&self, margin: f64) -> Result<bool> {
        Ok(self.spectral_abscissa()? < -margin)
    }

    /// Sub-system keeping the listed output rows and input columns.
    pub fn select(&self, outputs: &[usize], inputs: &[usize]) -> Result<Self> {
        if outputs.iter().any(|&o| o >= self.ny()) || inputs.iter().any(|&i| i >= self.nu()) {
            return Err(Error::dim("select", "channel index out of range"));
        }
        let b = self.b.select_columns(inputs);
        let c = self.c.select_rows(outputs);
        let d = self.d.select_rows(outputs).select_columns(inputs);
        Self::new(self.a.clone(), b, c, d)
    }

    /// `T_out * G * T_in`; the state realization is unchanged.
    pub fn scale_io(&self, t_out: &DMatrix<f64>, t_in: &DMatrix<f64>) -> Result<Self> {
        if t_out.ncols() != self.ny() || t_in.nrows() != self.nu() {
            return Err(Error::dim(
                "scale_io",
                format!(
                    "G is {}x{}, T_out is {}x{}, T_in is {}x{}",
                    self.ny(),
                    self.nu(),
                    t_out.nrows(),
                    t_out.ncols(),
                    t_in.nrows(),
                    t_in.ncols()
                ),
            ));
        }
        Self::new(
            self.a.clone(),
            &self.b * t_in,
            t_out * &self.c,
            t_out * &self.d * t_in,
        )
    }

    pub fn negate(&self) -> Self {
        Self {
            c: -&self.c,
            d: -&self.d,
            ..self.clone()
        }
    }

    /// Similarity transform `x = T z` with an orthogonal `T` supplied as its transpose inverse.
    pub fn similarity(&self, t: &DMatrix<f64>, t_inv: &DMatrix<f64>) -> Result<Self> {
        Self::new(
            t_inv * &self.a * t,
            t_inv * &self.b,
            &self.c * t,
            self.d.clone(),
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&StateSpaceDoc::from(self)).expect("serializable")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: StateSpaceDoc = serde_json::from_str(text)?;
        doc.try_into()
    }
}

/// JSON document form: row-major nested arrays plus optional labels.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateSpaceDoc {
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
    #[serde(rename = "C")]
    pub c: Vec<Vec<f64>>,
    #[serde(rename = "D")]
    pub d: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Labels>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Labels {
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
}

impl From<&StateSpaceModel> for StateSpaceDoc {
    fn from(g: &StateSpaceModel) -> Self {
        let labels = match (&g.input_labels, &g.output_labels) {
            (Some(i), Some(o)) => Some(Labels {
                inputs: i.clone(),
                outputs: o.clone(),
            }),
            _ => None,
        };
        Self {
            a: linalg::to_rows(&g.a),
            b: linalg::to_rows(&g.b),
            c: linalg::to_rows(&g.c),
            d: linalg::to_rows(&g.d),
            labels,
        }
    }
}

impl TryFrom<StateSpaceDoc> for StateSpaceModel {
    type Error = Error;

    fn try_from(doc: StateSpaceDoc) -> Result<Self> {
        let nx = doc.a.len();
        let nu = doc
            .b
            .first()
            .map(|r| r.len())
            .or_else(|| doc.d.first().map(|r| r.len()))
            .unwrap_or(0);
        let a = linalg::from_rows(&doc.a, 0, "A")?;
        let b = linalg::from_rows(&doc.b, nu, "B")?;
        let c = linalg::from_rows(&doc.c, nx, "C")?;
        let ny = c.nrows().max(doc.d.len());
        let c = if c.nrows() == 0 {
            DMatrix::zeros(ny, nx)
        } else {
            c
        };
        let d = if doc.d.is_empty() {
            DMatrix::zeros(ny, nu)
        } else {
            linalg::from_rows(&doc.d, nu, "D")?
        };
        let g = StateSpaceModel::new(a, b, c, d)?;
        match doc.labels {
            Some(l) => g.with_labels(l.inputs, l.outputs),
            None => Ok(g),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_nonconformable_matrices() {
        let a = DMatrix::identity(2, 2);
        let b = DMatrix::zeros(3, 1);
        let c = DMatrix::zeros(1, 2);
        let d = DMatrix::zeros(1, 1);
        assert!(matches!(
            StateSpaceModel::new(a, b, c, d),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn rejects_non_finite_entries() {
        let a = DMatrix::from_element(1, 1, f64::NAN);
        let r = StateSpaceModel::new(
            a,
            DMatrix::zeros(1, 1),
            DMatrix::zeros(1, 1),
            DMatrix::zeros(1, 1),
        );
        assert!(matches!(r, Err(Error::NonFinite(_))));
    }

    #[test]
    fn hurwitz_examples() {
        let g = StateSpaceModel::new(
            DMatrix::from_element(1, 1, -1.0),
            DMatrix::zeros(1, 1),
            DMatrix::zeros(1, 1),
            DMatrix::zeros(1, 1),
        )
        .unwrap();
        assert!(g.is_hurwitz(0.0).unwrap());
        let di = StateSpaceModel::new(
            DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]),
            DMatrix::zeros(2, 1),
            DMatrix::zeros(1, 2),
            DMatrix::zeros(1, 1),
        )
        .unwrap();
        assert!(!di.is_hurwitz(0.0).unwrap());
    }

    #[test]
    fn json_keeps_static_gain_shape() {
        let g = StateSpaceModel::gain(DMatrix::from_row_slice(2, 3, &[1., 2., 3., 4., 5., 6.]));
        let back = StateSpaceModel::from_json(&g.to_json()).unwrap();
        assert_eq!(back, g);
    }
}
