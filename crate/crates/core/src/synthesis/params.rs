use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::{RationalDiagonalFilter, Section};
use crate::linalg;

/// One rigid-body channel of `K_RB`: `k (s + w_i)/s * (s/w_z + 1)/(s/w_p + 1) * w_lp^2/(s^2 + 2 z w_lp s + w_lp^2)`.
/// Frequencies in Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KrbChannel {
    pub gain: f64,
    pub f_i: f64,
    pub f_z: f64,
    pub f_p: f64,
    pub f_lp: f64,
    pub zeta_lp: f64,
}

pub const KRB_PARAMS_PER_CHANNEL: usize = 6;

impl KrbChannel {
    /// Loop-shaping start: PI at `f_bw/5`, lead between `f_bw/3` and `3 f_bw`,
    /// low-pass at `6 f_bw`, gain giving `|K| = 1/|P|` at `f_bw`.
    pub fn heuristic(f_bw: f64, plant_mag_at_bw: f64) -> Self {
        let mut ch = Self {
            gain: 1.0,
            f_i: f_bw / 5.0,
            f_z: f_bw / 3.0,
            f_p: 3.0 * f_bw,
            f_lp: 6.0 * f_bw,
            zeta_lp: 0.7,
        };
        let k = ch.eval(Complex64::new(0.0, 2.0 * PI * f_bw)).norm();
        ch.gain = 1.0 / (k * plant_mag_at_bw);
        ch
    }

    pub fn to_array(&self) -> [f64; KRB_PARAMS_PER_CHANNEL] {
        [
            self.gain,
            self.f_i,
            self.f_z,
            self.f_p,
            self.f_lp,
            self.zeta_lp,
        ]
    }

    pub fn from_array(v: &[f64]) -> Self {
        Self {
            gain: v[0],
            f_i: v[1],
            f_z: v[2],
            f_p: v[3],
            f_lp: v[4],
            zeta_lp: v[5],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.to_array().iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("K_RB parameters"));
        }
        if [self.f_i, self.f_z, self.f_p, self.f_lp, self.zeta_lp]
            .iter()
            .any(|v| *v <= 0.0)
        {
            return Err(Error::param(
                "K_RB",
                "corner frequencies and damping must be positive",
            ));
        }
        Ok(())
    }

    pub fn sections(&self) -> Result<Vec<Section>> {
        let wi = 2.0 * PI * self.f_i;
        let wz = 2.0 * PI * self.f_z;
        let wp = 2.0 * PI * self.f_p;
        let wl = 2.0 * PI * self.f_lp;
        Ok(vec![
            Section::new(vec![self.gain, self.gain * wi], vec![1.0, 0.0])?,
            Section::new(vec![1.0 / wz, 1.0], vec![1.0 / wp, 1.0])?,
            Section::new(vec![wl * wl], vec![1.0, 2.0 * self.zeta_lp * wl, wl * wl])?,
        ])
    }

    pub fn eval(&self, s: Complex64) -> Complex64 {
        let wi = 2.0 * PI * self.f_i;
        let wz = 2.0 * PI * self.f_z;
        let wp = 2.0 * PI * self.f_p;
        let wl = 2.0 * PI * self.f_lp;
        self.gain * (s + wi) / s * (s / wz + 1.0) / (s / wp + 1.0) * (wl * wl)
            / (s * s + 2.0 * self.zeta_lp * wl * s + wl * wl)
    }
}

/// Tunable part of `diag(K_RB, L, K_FM)`. The band-pass backbone of `K_FM`
/// (centers and `Q`) is fixed problem data.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuredControllerParams {
    pub krb: Vec<KrbChannel>,
    pub l: DMatrix<f64>,
    pub xi: Vec<f64>,
}

impl StructuredControllerParams {
    pub fn krb_filter(&self) -> Result<RationalDiagonalFilter> {
        let mut ch = Vec::with_capacity(self.krb.len());
        for k in &self.krb {
            k.validate()?;
            ch.push(k.sections()?);
        }
        Ok(RationalDiagonalFilter::new(ch))
    }

    pub fn n_params(&self) -> usize {
        self.krb.len() * KRB_PARAMS_PER_CHANNEL + self.l.len() + self.xi.len()
    }

    /// Copy with every `K_RB` gain negated.
    pub fn sign_flipped(&self) -> Self {
        let mut out = self.clone();
        for k in &mut out.krb {
            k.gain = -k.gain;
        }
        out
    }

    pub fn to_doc(&self) -> ParamsDoc {
        ParamsDoc {
            krb: self.krb.clone(),
            l: linalg::to_rows(&self.l),
            xi: self.xi.clone(),
        }
    }

    pub fn from_doc(doc: &ParamsDoc) -> Result<Self> {
        let cols = doc.l.first().map_or(0, Vec::len);
        let l = linalg::from_rows(&doc.l, cols, "L")?;
        Ok(Self {
            krb: doc.krb.clone(),
            l,
            xi: doc.xi.clone(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsDoc {
    #[serde(rename = "K_RB")]
    pub krb: Vec<KrbChannel>,
    #[serde(rename = "L")]
    pub l: Vec<Vec<f64>>,
    pub xi: Vec<f64>,
}

/// Which parameter groups the optimizer may move.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FreeSet {
    pub krb: bool,
    pub l: bool,
    pub xi: bool,
}

impl FreeSet {
    pub const ALL: Self = Self {
        krb: true,
        l: true,
        xi: true,
    };
    pub const KRB_ONLY: Self = Self {
        krb: true,
        l: false,
        xi: false,
    };
}

/// Maps the free parameters to optimizer coordinates: logarithms for the
/// positive `K_RB` entries (gain sign kept), scaled offsets for `L` and `xi`.
#[derive(Debug, Clone)]
pub struct ParamScaling {
    pub base: StructuredControllerParams,
    pub free: FreeSet,
    l_scale: DMatrix<f64>,
    xi_scale: Vec<f64>,
}

impl ParamScaling {
    pub fn new(base: &StructuredControllerParams, free: FreeSet, xi_scale: Vec<f64>) -> Self {
        let lmax = base.l.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let floor = if lmax > 0.0 { 1e-3 * lmax } else { 1.0 };
        let l_scale = base.l.map(|v| v.abs().max(floor));
        Self {
            base: base.clone(),
            free,
            l_scale,
            xi_scale,
        }
    }

    pub fn dim(&self) -> usize {
        let mut n = 0;
        if self.free.krb {
            n += self.base.krb.len() * KRB_PARAMS_PER_CHANNEL;
        }
        if self.free.l {
            n += self.base.l.len();
        }
        if self.free.xi {
            n += self.base.xi.len();
        }
        n
    }

    pub fn encode(&self, p: &StructuredControllerParams) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.dim());
        if self.free.krb {
            for k in &p.krb {
                x.extend(k.to_array().iter().map(|v| v.abs().ln()));
            }
        }
        if self.free.l {
            for (i, v) in p.l.iter().enumerate() {
                x.push((v - self.base.l[i]) / self.l_scale[i]);
            }
        }
        if self.free.xi {
            for (i, v) in p.xi.iter().enumerate() {
                x.push((v - self.base.xi[i]) / self.xi_scale[i]);
            }
        }
        x
    }

    pub fn decode(&self, x: &[f64]) -> StructuredControllerParams {
        let mut p = self.base.clone();
        let mut k = 0;
        if self.free.krb {
            for (c, ch) in p.krb.iter_mut().enumerate() {
                let mut a = [0.0; KRB_PARAMS_PER_CHANNEL];
                for j in 0..KRB_PARAMS_PER_CHANNEL {
                    a[j] = x[k + j].exp();
                }
                a[0] *= self.base.krb[c].gain.signum();
                *ch = KrbChannel::from_array(&a);
                k += KRB_PARAMS_PER_CHANNEL;
            }
        }
        if self.free.l {
            for i in 0..p.l.len() {
                p.l[i] = self.base.l[i] + self.l_scale[i] * x[k];
                k += 1;
            }
        }
        if self.free.xi {
            for i in 0..p.xi.len() {
                p.xi[i] = self.base.xi[i] + self.xi_scale[i] * x[k];
                k += 1;
            }
        }
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> StructuredControllerParams {
        StructuredControllerParams {
            krb: vec![KrbChannel::heuristic(10.0, 1.0)],
            l: DMatrix::from_row_slice(2, 1, &[3.0, -0.5]),
            xi: vec![-1.5],
        }
    }

    #[test]
    fn heuristic_gives_unity_at_bandwidth() {
        let k = KrbChannel::heuristic(10.0, 2.0);
        let m = k.eval(Complex64::new(0.0, 2.0 * PI * 10.0)).norm();
        assert!((m * 2.0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sections_match_closed_form() {
        let k = KrbChannel::heuristic(10.0, 1.0);
        let f = RationalDiagonalFilter::new(vec![k.sections().unwrap()]);
        for w in [0.5, 10.0, 300.0] {
            let s = Complex64::new(0.0, w);
            assert!((f.eval_channel(0, s) - k.eval(s)).norm() < 1e-12 * k.eval(s).norm());
        }
    }

    #[test]
    fn encode_decode_roundtrip() {
        let p = sample();
        let sc = ParamScaling::new(&p, FreeSet::ALL, vec![2.0]);
        let x = sc.encode(&p);
        assert_eq!(x.len(), p.n_params());
        let mut x2 = x.clone();
        x2[6] += 1.0;
        x2[8] -= 0.5;
        let q = sc.decode(&x2);
        assert!((q.l[0] - 6.0).abs() < 1e-12);
        assert!((q.xi[0] + 2.5).abs() < 1e-12);
        let back = sc.decode(&x);
        assert!((back.krb[0].gain - p.krb[0].gain).abs() < 1e-12 * p.krb[0].gain);
    }
}
