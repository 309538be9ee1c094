use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack allowed when testing membership of the scheduling box.
const DOMAIN_SLACK: f64 = 1e-12;

/// Matrix-valued polynomial in the scheduling vector `p`, defined on a box.
///
/// Each monomial `p_0^e_0 * p_1^e_1 * ...` carries a coefficient matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionMap {
    rows: usize,
    cols: usize,
    domain: Vec<[f64; 2]>,
    terms: BTreeMap<Vec<u32>, DMatrix<f64>>,
}

/// One sparse entry of the JSON form: `{"entry": [r, c], "coeffs": {"1,0": 0.5}}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapEntry {
    pub entry: [usize; 2],
    pub coeffs: BTreeMap<String, f64>,
}

impl PositionMap {
    pub fn constant(m: DMatrix<f64>, domain: Vec<[f64; 2]>) -> Self {
        let mut terms = BTreeMap::new();
        let (rows, cols) = m.shape();
        terms.insert(vec![0; domain.len()], m);
        Self {
            rows,
            cols,
            domain,
            terms,
        }
    }

    pub fn zeros(rows: usize, cols: usize, domain: Vec<[f64; 2]>) -> Self {
        Self::constant(DMatrix::zeros(rows, cols), domain)
    }

    /// Builds a map from `(exponents, coefficient)` pairs.
    pub fn from_terms(
        rows: usize,
        cols: usize,
        domain: Vec<[f64; 2]>,
        terms: impl IntoIterator<Item = (Vec<u32>, DMatrix<f64>)>,
    ) -> Result<Self> {
        check_domain(&domain)?;
        let mut map = Self::zeros(rows, cols, domain);
        for (exp, coeff) in terms {
            if exp.len() != map.domain.len() {
                return Err(Error::dim(
                    "position map",
                    "monomial arity differs from the scheduling dimension",
                ));
            }
            if coeff.shape() != (rows, cols) {
                return Err(Error::dim("position map", "coefficient shape"));
            }
            if coeff.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("position map coefficient"));
            }
            *map.terms
                .entry(exp)
                .or_insert_with(|| DMatrix::zeros(rows, cols)) += coeff;
        }
        Ok(map)
    }

    pub fn from_entries(
        rows: usize,
        cols: usize,
        domain: Vec<[f64; 2]>,
        entries: &[MapEntry],
    ) -> Result<Self> {
        check_domain(&domain)?;
        let nv = domain.len();
        let mut terms: BTreeMap<Vec<u32>, DMatrix<f64>> = BTreeMap::new();
        for e in entries {
            let [r, c] = e.entry;
            if r >= rows || c >= cols {
                return Err(Error::dim(
                    "position map",
                    format!("entry [{r}, {c}] outside {rows}x{cols}"),
                ));
            }
            for (key, &v) in &e.coeffs {
                let exp = parse_monomial(key, nv)?;
                terms
                    .entry(exp)
                    .or_insert_with(|| DMatrix::zeros(rows, cols))[(r, c)] += v;
            }
        }
        Self::from_terms(rows, cols, domain, terms)
    }

    pub fn to_entries(&self) -> Vec<MapEntry> {
        let mut out = Vec::new();
        for r in 0..self.rows {
            for c in 0..self.cols {
                let coeffs: BTreeMap<String, f64> = self
                    .terms
                    .iter()
                    .filter(|(_, m)| m[(r, c)] != 0.0)
                    .map(|(e, m)| (format_monomial(e), m[(r, c)]))
                    .collect();
                if !coeffs.is_empty() {
                    out.push(MapEntry {
                        entry: [r, c],
                        coeffs,
                    });
                }
            }
        }
        out
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn domain(&self) -> &[[f64; 2]] {
        &self.domain
    }

    /// Largest total degree with a nonzero coefficient.
    pub fn degree(&self) -> u32 {
        self.terms
            .iter()
            .filter(|(_, m)| m.iter().any(|v| *v != 0.0))
            .map(|(e, _)| e.iter().sum())
            .max()
            .unwrap_or(0)
    }

    pub fn is_constant(&self) -> bool {
        self.degree() == 0
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        in_domain(&self.domain, p)
    }

    pub fn eval(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        if p.len() != self.domain.len() {
            return Err(Error::dim(
                "position map",
                format!(
                    "scheduling point has {} coordinates, domain has {}",
                    p.len(),
                    self.domain.len()
                ),
            ));
        }
        if !self.contains(p) {
            return Err(Error::OutsideDomain {
                point: p.to_vec(),
                domain: self.domain.clone(),
            });
        }
        Ok(self.eval_unchecked(p))
    }

    fn eval_unchecked(&self, p: &[f64]) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.rows, self.cols);
        for (exp, m) in &self.terms {
            let w: f64 = exp.iter().zip(p).map(|(&e, &x)| x.powi(e as i32)).product();
            out += m * w;
        }
        out
    }

    /// `T * Phi(p)`.
    pub fn left_mul(&self, t: &DMatrix<f64>) -> Result<Self> {
        if t.ncols() != self.rows {
            return Err(Error::dim("position map", "left factor columns"));
        }
        Ok(Self {
            rows: t.nrows(),
            cols: self.cols,
            domain: self.domain.clone(),
            terms: self.terms.iter().map(|(e, m)| (e.clone(), t * m)).collect(),
        })
    }

    /// `Phi(p) * T`.
    pub fn right_mul(&self, t: &DMatrix<f64>) -> Result<Self> {
        if t.nrows() != self.cols {
            return Err(Error::dim("position map", "right factor rows"));
        }
        Ok(Self {
            rows: self.rows,
            cols: t.ncols(),
            domain: self.domain.clone(),
            terms: self.terms.iter().map(|(e, m)| (e.clone(), m * t)).collect(),
        })
    }
}

pub(crate) fn check_domain(domain: &[[f64; 2]]) -> Result<()> {
    for (k, [lo, hi]) in domain.iter().enumerate() {
        if !lo.is_finite() || !hi.is_finite() || lo > hi {
            return Err(Error::InvalidModel(format!(
                "domain coordinate {k} has invalid bounds [{lo}, {hi}]"
            )));
        }
    }
    Ok(())
}

pub(crate) fn in_domain(domain: &[[f64; 2]], p: &[f64]) -> bool {
    p.len() == domain.len()
        && p.iter().zip(domain).all(|(&x, &[lo, hi])| {
            let slack = DOMAIN_SLACK * (hi - lo).abs().max(1.0);
            x.is_finite() && x >= lo - slack && x <= hi + slack
        })
}

/// Parses `"1,0"` into exponents; an empty key is the constant monomial.
fn parse_monomial(key: &str, nv: usize) -> Result<Vec<u32>> {
    let bad = |m: &str| Error::InvalidModel(format!("monomial key `{key}`: {m}"));
    if key.trim().is_empty() {
        return Ok(vec![0; nv]);
    }
    let exp = key
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<u32>()
                .map_err(|_| bad("exponents must be non-negative integers"))
        })
        .collect::<Result<Vec<_>>>()?;
    if exp.len() != nv {
        return Err(bad(&format!("expected {nv} exponents")));
    }
    Ok(exp)
}

fn format_monomial(e: &[u32]) -> String {
    e.iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sensor() -> PositionMap {
        // [1 - p, p]
        PositionMap::from_terms(
            1,
            2,
            vec![[0.0, 1.0]],
            [
                (vec![0], DMatrix::from_row_slice(1, 2, &[1.0, 0.0])),
                (vec![1], DMatrix::from_row_slice(1, 2, &[-1.0, 1.0])),
            ],
        )
        .unwrap()
    }

    #[test]
    fn linear_map_endpoints() {
        let s = sensor();
        assert_eq!(
            s.eval(&[0.0]).unwrap(),
            DMatrix::from_row_slice(1, 2, &[1.0, 0.0])
        );
        assert_eq!(
            s.eval(&[1.0]).unwrap(),
            DMatrix::from_row_slice(1, 2, &[0.0, 1.0])
        );
        assert_eq!(s.degree(), 1);
    }

    #[test]
    fn outside_domain_is_rejected() {
        assert!(matches!(
            sensor().eval(&[1.5]),
            Err(Error::OutsideDomain { .. })
        ));
    }

    #[test]
    fn entries_round_trip() {
        let s = sensor();
        let e = s.to_entries();
        let back = PositionMap::from_entries(1, 2, vec![[0.0, 1.0]], &e).unwrap();
        for p in [0.0, 0.25, 0.7] {
            assert_eq!(back.eval(&[p]).unwrap(), s.eval(&[p]).unwrap());
        }
    }

    #[test]
    fn bad_monomial_key() {
        let e = vec![MapEntry {
            entry: [0, 0],
            coeffs: [("1,2".to_string(), 1.0)].into(),
        }];
        assert!(PositionMap::from_entries(1, 1, vec![[0.0, 1.0]], &e).is_err());
    }
}
