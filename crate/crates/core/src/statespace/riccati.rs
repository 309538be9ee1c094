use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg;

/// Stabilizing solution of the filter Riccati equation
/// `A P + P A' - P C' V^-1 C P + Q = 0` and the gain `L = P C' V^-1`.
#[derive(Debug, Clone)]
pub struct CareSolution {
    pub p: DMatrix<f64>,
    pub l: DMatrix<f64>,
    /// Frobenius residual divided by the sum of the term norms.
    pub residual: f64,
    /// Spectral abscissa of `A - L C`.
    pub abscissa: f64,
}

pub const CARE_TOL: f64 = 1e-8;

pub fn care_solve(
    a: &DMatrix<f64>,
    c: &DMatrix<f64>,
    q: &DMatrix<f64>,
    v: &DMatrix<f64>,
) -> Result<CareSolution> {
    let n = a.nrows();
    let ny = c.nrows();
    if a.ncols() != n || c.ncols() != n || q.shape() != (n, n) || v.shape() != (ny, ny) {
        return Err(Error::dim(
            "care_solve",
            "A n x n, C ny x n, Q n x n, V ny x ny required",
        ));
    }
    if !linalg::all_finite(a)
        || !linalg::all_finite(c)
        || !linalg::all_finite(q)
        || !linalg::all_finite(v)
    {
        return Err(Error::NonFinite("Riccati data"));
    }
    let v_chol = v
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Riccati("V must be symmetric positive definite".into()))?;
    let v_inv = v_chol.inverse();
    let g = c.transpose() * &v_inv * c;
    if n == 0 {
        return Ok(CareSolution {
            p: DMatrix::zeros(0, 0),
            l: DMatrix::zeros(0, ny),
            residual: 0.0,
            abscissa: f64::NEG_INFINITY,
        });
    }

    let mut h = DMatrix::zeros(2 * n, 2 * n);
    h.view_mut((0, 0), (n, n)).copy_from(&a.transpose());
    h.view_mut((0, n), (n, n)).copy_from(&(-&g));
    h.view_mut((n, 0), (n, n)).copy_from(&(-q));
    h.view_mut((n, n), (n, n)).copy_from(&(-a));

    let u = stable_subspace(&h, n)?;
    let u11 = u.view((0, 0), (n, n)).clone_owned();
    let u21 = u.view((n, 0), (n, n)).clone_owned();
    let cond = {
        let sv = u11.clone().svd(false, false).singular_values;
        let mx = sv.iter().copied().fold(0.0, f64::max);
        let mn = sv.iter().copied().fold(f64::INFINITY, f64::min);
        if mn > 0.0 {
            mx / mn
        } else {
            f64::INFINITY
        }
    };
    if !(cond < 1e14) {
        return Err(Error::Riccati(
            "(A, C) is not detectable: stable subspace is not a graph".into(),
        ));
    }
    // P = U21 U11^-1, i.e. P U11 = U21 -> U11^T P^T = U21^T
    let pt = u11
        .transpose()
        .lu()
        .solve(&u21.transpose())
        .ok_or_else(|| Error::Riccati("singular U11".into()))?;
    let mut p = pt.transpose().map(|z| z.re);
    p = (&p + p.transpose()) * 0.5;

    let mut res = residual(a, &g, q, &p);
    for _ in 0..6 {
        if res <= 1e-14 {
            break;
        }
        match newton_step(a, &g, q, &p) {
            Ok(next) => {
                let r = residual(a, &g, q, &next);
                if r < res {
                    p = next;
                    res = r;
                } else {
                    break;
                }
            }
            Err(_) => break,
        }
    }

    let l = &p * c.transpose() * &v_inv;
    let abscissa = linalg::spectral_abscissa(&(a - &l * c))?;
    if res > CARE_TOL {
        return Err(Error::Riccati(format!(
            "residual {res:e} above tolerance {CARE_TOL:e}"
        )));
    }
    if abscissa >= 0.0 {
        return Err(Error::Riccati(format!(
            "A - L C is not Hurwitz (abscissa {abscissa:e}); pair not detectable"
        )));
    }
    Ok(CareSolution {
        p,
        l,
        residual: res,
        abscissa,
    })
}

/// Relative residual of `A P + P A' - P G P + Q`.
pub fn riccati_residual(
    a: &DMatrix<f64>,
    c: &DMatrix<f64>,
    q: &DMatrix<f64>,
    v: &DMatrix<f64>,
    p: &DMatrix<f64>,
) -> f64 {
    let v_inv = v
        .clone()
        .try_inverse()
        .unwrap_or_else(|| DMatrix::from_element(v.nrows(), v.ncols(), f64::NAN));
    let g = c.transpose() * v_inv * c;
    residual(a, &g, q, p)
}

fn residual(a: &DMatrix<f64>, g: &DMatrix<f64>, q: &DMatrix<f64>, p: &DMatrix<f64>) -> f64 {
    let ap = a * p;
    let pgp = p * g * p;
    let r = &ap + ap.transpose() - &pgp + q;
    let scale = 2.0 * ap.norm() + pgp.norm() + q.norm();
    if scale == 0.0 {
        0.0
    } else {
        r.norm() / scale
    }
}

fn newton_step(
    a: &DMatrix<f64>,
    g: &DMatrix<f64>,
    q: &DMatrix<f64>,
    p: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    // (A - P G) X + X (A - P G)' + Q + P G P = 0
    let acl = a - p * g;
    let rhs = q + p * g * p;
    let x = lyapunov_solve(&acl, &rhs)?;
    Ok((&x + x.transpose()) * 0.5)
}

/// Solves `A X + X A' + Q = 0` through the Kronecker form.
pub fn lyapunov_solve(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if a.ncols() != n || q.shape() != (n, n) {
        return Err(Error::dim(
            "lyapunov",
            "A and Q must be square and conformable",
        ));
    }
    let eye = DMatrix::identity(n, n);
    let k = eye.kronecker(a) + a.kronecker(&eye);
    let rhs = -DMatrix::from_column_slice(n * n, 1, q.as_slice());
    let x = k
        .full_piv_lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Riccati("singular Lyapunov operator".into()))?;
    Ok(DMatrix::from_column_slice(n, n, x.as_slice()))
}

/// Orthonormal basis (2n x n, complex) of the stable invariant subspace of `h`.
fn stable_subspace(h: &DMatrix<f64>, n: usize) -> Result<DMatrix<Complex64>> {
    let hc = h.map(|v| Complex64::new(v, 0.0));
    let dim = hc.nrows();
    let schur =
        Schur::try_new(hc, f64::EPSILON, 5000 * dim.max(10)).ok_or(Error::EigenSolver(dim))?;
    let (mut u, mut t) = schur.unpack();
    triangularize(&mut u, &mut t);

    let stable = |z: Complex64| z.re < 0.0;
    let count = (0..dim).filter(|&k| stable(t[(k, k)])).count();
    if count != n {
        return Err(Error::Riccati(format!(
            "Hamiltonian has {count} stable eigenvalues, expected {n} (eigenvalues on the imaginary axis)"
        )));
    }
    // Bubble stable eigenvalues to the leading block with adjacent swaps.
    let mut placed = 0;
    for k in 0..dim {
        if stable(t[(k, k)]) {
            let mut j = k;
            while j > placed {
                swap_adjacent(&mut u, &mut t, j - 1);
                j -= 1;
            }
            placed += 1;
        }
    }
    for k in 0..n {
        if !stable(t[(k, k)]) {
            return Err(Error::Riccati("Schur reordering lost an eigenvalue".into()));
        }
    }
    Ok(u.columns(0, n).clone_owned())
}

/// Complex Schur output can keep tiny 2x2 bumps; rotate them away.
fn triangularize(u: &mut DMatrix<Complex64>, t: &mut DMatrix<Complex64>) {
    let dim = t.nrows();
    let tnorm = t.norm();
    for k in 0..dim.saturating_sub(1) {
        if t[(k + 1, k)].norm() <= f64::EPSILON * tnorm {
            t[(k + 1, k)] = Complex64::new(0.0, 0.0);
            continue;
        }
        let (a, b, c, d) = (t[(k, k)], t[(k, k + 1)], t[(k + 1, k)], t[(k + 1, k + 1)]);
        let tr = a + d;
        let det = a * d - b * c;
        let disc = (tr * tr * 0.25 - det).sqrt();
        let lambda = tr * 0.5 + disc;
        // eigenvector of the block for lambda
        let mut x = [b, lambda - a];
        if x[0].norm() + x[1].norm() < 1e-300 {
            x = [lambda - d, c];
        }
        let nrm = (x[0].norm_sqr() + x[1].norm_sqr()).sqrt();
        let q1 = [x[0] / nrm, x[1] / nrm];
        apply_rotation(u, t, k, q1);
        t[(k + 1, k)] = Complex64::new(0.0, 0.0);
    }
}

fn swap_adjacent(u: &mut DMatrix<Complex64>, t: &mut DMatrix<Complex64>, k: usize) {
    let a = t[(k, k)];
    let b = t[(k + 1, k + 1)];
    let v = [t[(k, k + 1)], b - a];
    let nrm = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
    if nrm == 0.0 {
        return;
    }
    apply_rotation(u, t, k, [v[0] / nrm, v[1] / nrm]);
    t[(k + 1, k)] = Complex64::new(0.0, 0.0);
}

/// Applies the unitary `Q = [q1, q2]` with `q2 = [-conj(q1[1]), conj(q1[0])]`
/// to rows/columns `k, k+1`: `T <- Q^H T Q`, `U <- U Q`.
fn apply_rotation(
    u: &mut DMatrix<Complex64>,
    t: &mut DMatrix<Complex64>,
    k: usize,
    q1: [Complex64; 2],
) {
    let q2 = [-q1[1].conj(), q1[0].conj()];
    let dim = t.nrows();
    for j in 0..dim {
        let (x, y) = (t[(k, j)], t[(k + 1, j)]);
        t[(k, j)] = q1[0].conj() * x + q1[1].conj() * y;
        t[(k + 1, j)] = q2[0].conj() * x + q2[1].conj() * y;
    }
    for i in 0..dim {
        let (x, y) = (t[(i, k)], t[(i, k + 1)]);
        t[(i, k)] = x * q1[0] + y * q1[1];
        t[(i, k + 1)] = x * q2[0] + y * q2[1];
    }
    for i in 0..u.nrows() {
        let (x, y) = (u[(i, k)], u[(i, k + 1)]);
        u[(i, k)] = x * q1[0] + y * q1[1];
        u[(i, k + 1)] = x * q2[0] + y * q2[1];
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: f64) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, v)
    }

    #[test]
    fn stable_scalar_without_noise_gives_zero_gain() {
        let sol = care_solve(&s(-1.0), &s(1.0), &s(0.0), &s(1.0)).unwrap();
        assert!(sol.p[(0, 0)].abs() < 1e-14);
        assert!(sol.l[(0, 0)].abs() < 1e-14);
    }

    #[test]
    fn unstable_scalar_matches_quadratic_formula() {
        let sol = care_solve(&s(1.0), &s(1.0), &s(0.0), &s(1.0)).unwrap();
        assert!((sol.p[(0, 0)] - 2.0).abs() < 1e-12);
        assert!((sol.l[(0, 0)] - 2.0).abs() < 1e-12);
        assert!((sol.abscissa + 1.0).abs() < 1e-12);
    }

    #[test]
    fn lyapunov_scalar() {
        let x = lyapunov_solve(&s(-2.0), &s(4.0)).unwrap();
        assert!((x[(0, 0)] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn undetectable_pair_is_rejected() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let c = DMatrix::from_row_slice(1, 2, &[0.0, 1.0]);
        let r = care_solve(&a, &c, &DMatrix::identity(2, 2), &s(1.0));
        assert!(r.is_err());
    }
}
