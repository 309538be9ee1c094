//! Dense linear-algebra helpers shared by the numerical modules.

use nalgebra::{DMatrix, DVector, Schur};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Relative singular-value cutoff used for rank decisions and pseudo-inverses.
pub const RANK_CUTOFF: f64 = 1e-10;

/// All eigenvalues of a real square matrix.
pub fn eigenvalues(a: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    let n = a.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("eigenvalue input"));
    }
    let m = faer::Mat::<f64>::from_fn(n, n, |i, j| a[(i, j)]);
    if let Ok(ev) = m.eigenvalues() {
        if ev.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Ok(ev.iter().map(|z| Complex64::new(z.re, z.im)).collect());
        }
    }
    Schur::try_new(a.clone(), f64::EPSILON, 5000 * n.max(10))
        .map(|s| s.complex_eigenvalues().iter().copied().collect())
        .ok_or(Error::EigenSolver(n))
}

/// Largest real part over the spectrum; `-inf` for an empty matrix.
pub fn spectral_abscissa(a: &DMatrix<f64>) -> Result<f64> {
    Ok(eigenvalues(a)?
        .iter()
        .map(|l| l.re)
        .fold(f64::NEG_INFINITY, f64::max))
}

pub fn block_diag(blocks: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), (b.nrows(), b.ncols())).copy_from(b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}

pub fn diag(values: &[f64]) -> DMatrix<f64> {
    DMatrix::from_diagonal(&DVector::from_column_slice(values))
}

pub fn all_finite(m: &DMatrix<f64>) -> bool {
    m.iter().all(|v| v.is_finite())
}

/// Largest singular value of a complex matrix.
pub fn sigma_max(m: &DMatrix<Complex64>) -> f64 {
    match m.shape() {
        (0, _) | (_, 0) => 0.0,
        (1, _) | (_, 1) => m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt(),
        _ => m
            .clone()
            .svd(false, false)
            .singular_values
            .iter()
            .copied()
            .fold(0.0, f64::max),
    }
}

/// Moore-Penrose pseudo-inverse with a singular-value cutoff relative to `sigma_max`.
///
/// Returns the pseudo-inverse and the numerical rank.
pub fn pinv(m: &DMatrix<f64>) -> (DMatrix<f64>, usize) {
    let (r, c) = m.shape();
    if r == 0 || c == 0 {
        return (DMatrix::zeros(c, r), 0);
    }
    let svd = m.clone().svd(true, true);
    let u = svd.u.as_ref().expect("u requested");
    let vt = svd.v_t.as_ref().expect("v_t requested");
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let cutoff = RANK_CUTOFF * smax;
    let mut out = DMatrix::zeros(c, r);
    let mut rank = 0;
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > cutoff && s > 0.0 {
            rank += 1;
            out += vt.row(k).transpose() * u.column(k).transpose() / s;
        }
    }
    (out, rank)
}

/// Pseudo-inverse that fails unless the matrix has full row rank (`rows == true`)
/// or full column rank. The error names the deficient directions.
pub fn pinv_full_rank(
    m: &DMatrix<f64>,
    full_row_rank: bool,
    what: &'static str,
) -> Result<DMatrix<f64>> {
    let (pi, rank) = pinv(m);
    let required = if full_row_rank { m.nrows() } else { m.ncols() };
    if rank < required {
        return Err(Error::RankDeficient {
            what,
            rank,
            required,
            directions: deficient_directions(m, full_row_rank, required - rank),
        });
    }
    Ok(pi)
}

fn deficient_directions(m: &DMatrix<f64>, rows: bool, count: usize) -> Vec<Vec<f64>> {
    // Left null space for row-rank defects, right null space for column-rank defects.
    let target = if rows { m.transpose() } else { m.clone() };
    let gram = target.transpose() * &target;
    let eig = gram.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    order
        .into_iter()
        .take(count)
        .map(|k| eig.eigenvectors.column(k).iter().copied().collect())
        .collect()
}

pub fn logspace(lo_exp: f64, hi_exp: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![10f64.powf(lo_exp)],
        _ => (0..n)
            .map(|k| 10f64.powf(lo_exp + (hi_exp - lo_exp) * k as f64 / (n - 1) as f64))
            .collect(),
    }
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
            .collect(),
    }
}

pub fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Builds a matrix from row-major nested vectors. `cols_if_empty` supplies the
/// column count when there are no rows to infer it from.
pub fn from_rows(
    rows: &[Vec<f64>],
    cols_if_empty: usize,
    context: &'static str,
) -> Result<DMatrix<f64>> {
    if rows.is_empty() {
        return Ok(DMatrix::zeros(0, cols_if_empty));
    }
    let cols = rows[0].len();
    if rows.iter().any(|r| r.len() != cols) {
        return Err(Error::dim(context, "ragged rows"));
    }
    Ok(DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

pub fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.kronecker(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pinv_of_two_identical_actuators() {
        let m = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let (p, rank) = pinv(&m);
        assert_eq!(rank, 1);
        assert!((p[(0, 0)] - 0.5).abs() < 1e-14);
        assert!((p[(1, 0)] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn rank_deficiency_reports_direction() {
        let m = DMatrix::from_row_slice(2, 1, &[1.0, 2.0]);
        let err = pinv_full_rank(&m, true, "test").unwrap_err();
        match err {
            Error::RankDeficient {
                rank,
                required,
                directions,
                ..
            } => {
                assert_eq!((rank, required), (1, 2));
                assert_eq!(directions.len(), 1);
                let d = &directions[0];
                // orthogonal to [1, 2]
                assert!((d[0] + 2.0 * d[1]).abs() < 1e-12);
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn abscissa_of_double_integrator_is_zero() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        assert_eq!(spectral_abscissa(&a).unwrap(), 0.0);
    }
}
