use nalgebra::{DMatrix, DVector};

use super::StateSpaceModel;
use crate::error::{Error, Result};

/// Zero-order-hold equivalent `x[k+1] = Ad x[k] + Bd u[k]`.
#[derive(Debug, Clone)]
pub struct DiscreteModel {
    pub ad: DMatrix<f64>,
    pub bd: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
    pub dt: f64,
}

impl DiscreteModel {
    pub fn step(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        &self.ad * x + &self.bd * u
    }

    pub fn output(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        &self.c * x + &self.d * u
    }
}

/// Exact discretization via the exponential of `[[A, B], [0, 0]] dt`.
pub fn zoh_discretize(g: &StateSpaceModel, dt: f64) -> Result<DiscreteModel> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::param("dt", "must be positive and finite"));
    }
    let (n, m) = (g.nx(), g.nu());
    let mut aug = DMatrix::zeros(n + m, n + m);
    aug.view_mut((0, 0), (n, n)).copy_from(&(g.a() * dt));
    aug.view_mut((0, n), (n, m)).copy_from(&(g.b() * dt));
    let e = if n + m == 0 { aug } else { aug.exp() };
    if e.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("matrix exponential"));
    }
    Ok(DiscreteModel {
        ad: e.view((0, 0), (n, n)).clone_owned(),
        bd: e.view((0, n), (n, m)).clone_owned(),
        c: g.c().clone(),
        d: g.d().clone(),
        dt,
    })
}

/// Sampled trajectories; row `k` of each matrix is sample `k`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub x: DMatrix<f64>,
    pub y: DMatrix<f64>,
}

/// Simulates from rest. `u` holds one input sample per row.
pub fn simulate(g: &StateSpaceModel, u: &DMatrix<f64>, dt: f64) -> Result<Trajectory> {
    simulate_from(g, &DVector::zeros(g.nx()), u, dt)
}

pub fn simulate_from(
    g: &StateSpaceModel,
    x0: &DVector<f64>,
    u: &DMatrix<f64>,
    dt: f64,
) -> Result<Trajectory> {
    if u.ncols() != g.nu() {
        return Err(Error::dim(
            "simulate",
            format!("{} input columns for {} inputs", u.ncols(), g.nu()),
        ));
    }
    if x0.len() != g.nx() {
        return Err(Error::dim("simulate", "initial state length"));
    }
    if u.nrows() < 2 {
        return Err(Error::param("u", "at least two input samples are required"));
    }
    if u.iter().any(|v| !v.is_finite()) || x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("simulation input"));
    }
    let dm = zoh_discretize(g, dt)?;
    let n_s = u.nrows();
    let mut xs = DMatrix::zeros(n_s, g.nx());
    let mut ys = DMatrix::zeros(n_s, g.ny());
    let mut x = x0.clone();
    for k in 0..n_s {
        let uk = u.row(k).transpose();
        xs.row_mut(k).copy_from(&x.transpose());
        ys.row_mut(k).copy_from(&dm.output(&x, &uk).transpose());
        x = dm.step(&x, &uk);
    }
    if xs.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("simulated state"));
    }
    Ok(Trajectory {
        t: (0..n_s).map(|k| k as f64 * dt).collect(),
        x: xs,
        y: ys,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_order_step_matches_analytic() {
        let g = StateSpaceModel::new(
            DMatrix::from_element(1, 1, -1.0),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::zeros(1, 1),
        )
        .unwrap();
        let dt = 0.01;
        let u = DMatrix::from_element(501, 1, 1.0);
        let tr = simulate(&g, &u, dt).unwrap();
        let y5 = tr.y[(500, 0)];
        assert!((y5 - (1.0 - (-5.0f64).exp())).abs() < 1e-6);
    }

    #[test]
    fn zero_input_zero_output() {
        let g = StateSpaceModel::new(
            DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -4.0, -0.2]),
            DMatrix::from_column_slice(2, 1, &[0.0, 1.0]),
            DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
            DMatrix::zeros(1, 1),
        )
        .unwrap();
        let tr = simulate(&g, &DMatrix::zeros(100, 1), 0.01).unwrap();
        assert!(tr.y.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn rejects_non_finite_samples() {
        let g = StateSpaceModel::identity(1);
        let mut u = DMatrix::zeros(3, 1);
        u[(1, 0)] = f64::NAN;
        assert!(matches!(simulate(&g, &u, 0.1), Err(Error::NonFinite(_))));
    }
}
