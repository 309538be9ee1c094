use std::f64::consts::PI;
use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::StateSpaceModel;
use crate::error::{Error, Result};
use crate::linalg;

/// Complex transfer matrices on an ascending frequency grid (Hz).
#[derive(Debug, Clone)]
pub struct FrequencyResponse {
    pub freqs: Vec<f64>,
    pub values: Vec<DMatrix<Complex64>>,
}

impl FrequencyResponse {
    pub fn new(freqs: Vec<f64>, values: Vec<DMatrix<Complex64>>) -> Result<Self> {
        if freqs.len() != values.len() {
            return Err(Error::dim(
                "frequency response",
                "one matrix per grid point required",
            ));
        }
        check_grid(&freqs)?;
        Ok(Self { freqs, values })
    }

    /// Magnitude of one channel across the grid.
    pub fn magnitude(&self, out: usize, inp: usize) -> Vec<f64> {
        self.values.iter().map(|m| m[(out, inp)].norm()).collect()
    }

    /// Largest singular value per grid point.
    pub fn sigma_max(&self) -> Vec<f64> {
        self.values.iter().map(linalg::sigma_max).collect()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["freq_hz", "out", "in", "re", "im", "mag_db", "phase_deg"])?;
        for (f, m) in self.freqs.iter().zip(&self.values) {
            for i in 0..m.nrows() {
                for j in 0..m.ncols() {
                    let z = m[(i, j)];
                    wr.write_record(&[
                        format!("{f:.12e}"),
                        i.to_string(),
                        j.to_string(),
                        format!("{:.12e}", z.re),
                        format!("{:.12e}", z.im),
                        format!("{:.9}", 20.0 * z.norm().log10()),
                        format!("{:.9}", z.arg().to_degrees()),
                    ])?;
                }
            }
        }
        wr.flush()?;
        Ok(())
    }
}

fn check_grid(freqs: &[f64]) -> Result<()> {
    if freqs.iter().any(|f| !f.is_finite() || *f < 0.0) {
        return Err(Error::param(
            "freqs",
            "frequencies must be finite and non-negative",
        ));
    }
    if freqs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param("freqs", "grid must be strictly ascending"));
    }
    Ok(())
}

/// `C (j 2 pi f I - A)^-1 B + D` on every grid point.
pub fn freq_response(g: &StateSpaceModel, freqs: &[f64]) -> Result<FrequencyResponse> {
    check_grid(freqs)?;
    let ev = FrequencyEvaluator::new(g)?;
    let values = freqs
        .iter()
        .map(|&f| ev.eval(2.0 * PI * f))
        .collect::<Result<Vec<_>>>()?;
    Ok(FrequencyResponse {
        freqs: freqs.to_vec(),
        values,
    })
}

/// Reusable evaluator: A is reduced once to Hessenberg form so that each
/// frequency costs a banded solve instead of a dense factorization.
#[derive(Debug, Clone)]
pub struct FrequencyEvaluator {
    h: DMatrix<f64>,
    qtb: DMatrix<f64>,
    cq: DMatrix<f64>,
    d: DMatrix<f64>,
    scale: f64,
}

impl FrequencyEvaluator {
    pub fn new(g: &StateSpaceModel) -> Result<Self> {
        let n = g.nx();
        if n == 0 {
            return Ok(Self {
                h: DMatrix::zeros(0, 0),
                qtb: DMatrix::zeros(0, g.nu()),
                cq: DMatrix::zeros(g.ny(), 0),
                d: g.d().clone(),
                scale: 1.0,
            });
        }
        let mut a = g.a().clone();
        let t = nalgebra::linalg::balancing::balance_parlett_reinsch(&mut a);
        let b = DMatrix::from_fn(n, g.nu(), |i, j| g.b()[(i, j)] / t[i]);
        let c = DMatrix::from_fn(g.ny(), n, |i, j| g.c()[(i, j)] * t[j]);
        let (q, h) = a.hessenberg().unpack();
        let qtb = q.transpose() * b;
        let cq = c * &q;
        let scale = h.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        Ok(Self {
            h,
            qtb,
            cq,
            d: g.d().clone(),
            scale,
        })
    }

    pub fn ny(&self) -> usize {
        self.d.nrows()
    }

    pub fn nu(&self) -> usize {
        self.d.ncols()
    }

    /// Transfer matrix at angular frequency `w` (rad/s).
    pub fn eval(&self, w: f64) -> Result<DMatrix<Complex64>> {
        let n = self.h.nrows();
        let (ny, nu) = self.d.shape();
        let mut out = self.d.map(|v| Complex64::new(v, 0.0));
        if n == 0 || nu == 0 || ny == 0 {
            return Ok(out);
        }
        let jw = Complex64::new(0.0, w);
        let mut m = DMatrix::from_fn(n, n, |i, j| {
            let v = Complex64::new(-self.h[(i, j)], 0.0);
            if i == j {
                v + jw
            } else {
                v
            }
        });
        let mut rhs = self.qtb.map(|v| Complex64::new(v, 0.0));
        let tol = f64::EPSILON * f64::EPSILON * (self.scale + w.abs());
        // Gaussian elimination on an upper-Hessenberg matrix with adjacent-row pivoting.
        for k in 0..n {
            if k + 1 < n && m[(k + 1, k)].norm() > m[(k, k)].norm() {
                m.swap_rows(k, k + 1);
                rhs.swap_rows(k, k + 1);
            }
            let piv = m[(k, k)];
            if piv.norm() <= tol {
                return Err(Error::SingularFrequency {
                    freq_hz: w / (2.0 * PI),
                    pivot: piv.norm(),
                });
            }
            if k + 1 < n {
                let f = m[(k + 1, k)] / piv;
                if f != Complex64::new(0.0, 0.0) {
                    for j in k..n {
                        let t = m[(k, j)];
                        m[(k + 1, j)] -= f * t;
                    }
                    for j in 0..nu {
                        let t = rhs[(k, j)];
                        rhs[(k + 1, j)] -= f * t;
                    }
                }
            }
        }
        for k in (0..n).rev() {
            for j in 0..nu {
                let mut s = rhs[(k, j)];
                for i in k + 1..n {
                    s -= m[(k, i)] * rhs[(i, j)];
                }
                rhs[(k, j)] = s / m[(k, k)];
            }
        }
        for i in 0..ny {
            for j in 0..nu {
                let mut s = Complex64::new(0.0, 0.0);
                for k in 0..n {
                    s += self.cq[(i, k)] * rhs[(k, j)];
                }
                out[(i, j)] += s;
            }
        }
        Ok(out)
    }

    pub fn eval_hz(&self, f: f64) -> Result<DMatrix<Complex64>> {
        self.eval(2.0 * PI * f)
    }

    pub fn sigma_max(&self, w: f64) -> Result<f64> {
        Ok(linalg::sigma_max(&self.eval(w)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn first_order() -> StateSpaceModel {
        StateSpaceModel::new(
            DMatrix::from_element(1, 1, -1.0),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::zeros(1, 1),
        )
        .unwrap()
    }

    #[test]
    fn dc_gain_and_corner() {
        let ev = FrequencyEvaluator::new(&first_order()).unwrap();
        let dc = ev.eval(0.0).unwrap()[(0, 0)];
        assert!((dc - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        let corner = ev.eval(1.0).unwrap()[(0, 0)];
        assert!((corner - Complex64::new(0.5, -0.5)).norm() < 1e-15);
        assert!((corner.norm() - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn pole_on_axis_is_singular() {
        let di = StateSpaceModel::new(
            DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]),
            DMatrix::from_column_slice(2, 1, &[0.0, 1.0]),
            DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
            DMatrix::zeros(1, 1),
        )
        .unwrap();
        assert!(matches!(
            freq_response(&di, &[0.0]),
            Err(Error::SingularFrequency { .. })
        ));
        assert!(freq_response(&di, &[1.0]).is_ok());
    }

    #[test]
    fn csv_has_header_and_one_row_per_entry() {
        let fr = freq_response(&first_order(), &[0.1, 1.0]).unwrap();
        let mut buf = Vec::new();
        fr.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "freq_hz,out,in,re,im,mag_db,phase_deg");
        assert_eq!(lines.len(), 3);
    }

    #[test]
    fn rejects_descending_grid() {
        assert!(freq_response(&first_order(), &[2.0, 1.0]).is_err());
    }
}
