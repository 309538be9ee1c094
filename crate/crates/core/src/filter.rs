//! Diagonal transfer matrices built from cascaded low-order rational sections.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::statespace::{append, series, StateSpaceModel};

/// `num(s) / den(s)` with coefficients in descending powers of `s`, order at most two.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Section {
    pub num: Vec<f64>,
    pub den: Vec<f64>,
}

impl Section {
    pub fn new(num: Vec<f64>, den: Vec<f64>) -> Result<Self> {
        let num = trim(if num.is_empty() { vec![0.0] } else { num });
        let den = trim(if den.is_empty() { vec![0.0] } else { den });
        if den.iter().all(|v| *v == 0.0) {
            return Err(Error::param("section", "denominator is identically zero"));
        }
        if den.len() > 3 {
            return Err(Error::param("section", "sections are at most second order"));
        }
        if num.len() > den.len() {
            return Err(Error::param(
                "section",
                "improper section (numerator degree exceeds denominator)",
            ));
        }
        if num.iter().chain(&den).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("filter coefficients"));
        }
        Ok(Self { num, den })
    }

    pub fn gain(k: f64) -> Self {
        Self {
            num: vec![k],
            den: vec![1.0],
        }
    }

    pub fn eval(&self, s: Complex64) -> Complex64 {
        polyval(&self.num, s) / polyval(&self.den, s)
    }

    pub fn order(&self) -> usize {
        self.den.len() - 1
    }

    /// Controllable canonical realization.
    pub fn to_ss(&self) -> StateSpaceModel {
        let n = self.order();
        let a0 = self.den[0];
        let den: Vec<f64> = self.den.iter().map(|v| v / a0).collect();
        let mut num = vec![0.0; self.den.len() - self.num.len()];
        num.extend(self.num.iter().map(|v| v / a0));
        let d = num[0];
        let mut a = DMatrix::zeros(n, n);
        for j in 0..n {
            a[(0, j)] = -den[j + 1];
        }
        for i in 1..n {
            a[(i, i - 1)] = 1.0;
        }
        let mut b = DMatrix::zeros(n, 1);
        if n > 0 {
            b[(0, 0)] = 1.0;
        }
        let c = DMatrix::from_fn(1, n, |_, j| num[j + 1] - d * den[j + 1]);
        StateSpaceModel::new(a, b, c, DMatrix::from_element(1, 1, d))
            .expect("section realization is consistent")
    }
}

fn trim(mut v: Vec<f64>) -> Vec<f64> {
    while v.len() > 1 && v[0] == 0.0 {
        v.remove(0);
    }
    v
}

fn polyval(c: &[f64], s: Complex64) -> Complex64 {
    c.iter()
        .fold(Complex64::new(0.0, 0.0), |acc, &k| acc * s + k)
}

/// Square diagonal filter; each channel is a cascade of [`Section`]s.
/// A channel with no sections is a unit gain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RationalDiagonalFilter {
    pub channels: Vec<Vec<Section>>,
}

impl RationalDiagonalFilter {
    pub fn new(channels: Vec<Vec<Section>>) -> Self {
        Self { channels }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            channels: vec![Vec::new(); n],
        }
    }

    pub fn zero(n: usize) -> Self {
        Self {
            channels: vec![vec![Section::gain(0.0)]; n],
        }
    }

    pub fn static_gains(k: &[f64]) -> Self {
        Self {
            channels: k.iter().map(|&v| vec![Section::gain(v)]).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    pub fn eval_channel(&self, k: usize, s: Complex64) -> Complex64 {
        self.channels[k]
            .iter()
            .fold(Complex64::new(1.0, 0.0), |acc, sec| acc * sec.eval(s))
    }

    /// Diagonal response at angular frequency `w`.
    pub fn eval(&self, w: f64) -> DMatrix<Complex64> {
        let s = Complex64::new(0.0, w);
        let n = self.len();
        let mut m = DMatrix::zeros(n, n);
        for k in 0..n {
            m[(k, k)] = self.eval_channel(k, s);
        }
        m
    }

    pub fn channel_ss(&self, k: usize) -> Result<StateSpaceModel> {
        let mut g = StateSpaceModel::identity(1);
        for sec in &self.channels[k] {
            g = series(&g, &sec.to_ss())?;
        }
        Ok(g)
    }

    pub fn to_ss(&self) -> Result<StateSpaceModel> {
        let parts = (0..self.len())
            .map(|k| self.channel_ss(k))
            .collect::<Result<Vec<_>>>()?;
        append(&parts.iter().collect::<Vec<_>>())
    }

    pub fn state_dim(&self) -> usize {
        self.channels.iter().flatten().map(Section::order).sum()
    }

    /// Multiplies channel `k` by a static factor.
    pub fn scale_channel(&mut self, k: usize, factor: f64) {
        self.channels[k].push(Section::gain(factor));
    }
}
