//! Deterministic desk-scale benchmark plants with position-dependent sensing.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg;
use crate::mechanics::{MechanicalModel, PositionMap};

/// A benchmark plant together with its design data.
#[derive(Debug, Clone)]
pub struct BenchmarkSpec {
    pub name: String,
    pub model: MechanicalModel,
    pub n_rb: usize,
    pub n_flex: usize,
    /// Retained flexible modes (0-based modal indices).
    pub retain: Vec<usize>,
    pub p_star: Vec<f64>,
    pub grid: Vec<Vec<f64>>,
    /// Target rigid-body bandwidth per RB channel (Hz).
    pub f_bw: Vec<f64>,
}

pub const TWO_MASS_F_FLEX: f64 = 50.0;
pub const TWO_MASS_ZETA: f64 = 0.01;
pub const MMPA_F_TORSION: f64 = 120.0;
pub const MMPA_F_SADDLE: f64 = 180.0;
pub const MMPA_ZETA: f64 = 0.005;

/// Two unit masses joined by a spring with a 50 Hz flexible mode, two
/// collocated force actuators and a sensor reading `(1 - p) q1 + p q2`.
pub fn make_two_mass() -> MechanicalModel {
    make_two_mass_with(false)
}

/// As [`make_two_mass`]; `second_sensor` adds the mirrored row `[p, 1 - p]`.
pub fn make_two_mass_with(second_sensor: bool) -> MechanicalModel {
    let w = 2.0 * PI * TWO_MASS_F_FLEX;
    let k = w * w / 2.0;
    let c = TWO_MASS_ZETA * w;
    let pattern = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]);
    let domain = vec![[0.0, 1.0]];
    let ny = if second_sensor { 2 } else { 1 };
    let mut c0 = DMatrix::zeros(ny, 2);
    let mut c1 = DMatrix::zeros(ny, 2);
    c0[(0, 0)] = 1.0;
    c1[(0, 0)] = -1.0;
    c1[(0, 1)] = 1.0;
    if second_sensor {
        c0[(1, 1)] = 1.0;
        c1[(1, 0)] = 1.0;
        c1[(1, 1)] = -1.0;
    }
    let phi_s = PositionMap::from_terms(ny, 2, domain.clone(), [(vec![0], c0), (vec![1], c1)])
        .expect("consistent");
    MechanicalModel::new(
        "two_mass",
        DMatrix::identity(2, 2),
        &pattern * c,
        &pattern * k,
        PositionMap::constant(DMatrix::identity(2, 2), domain),
        phi_s,
    )
    .expect("two-mass benchmark is valid")
}

pub fn two_mass_spec() -> BenchmarkSpec {
    BenchmarkSpec {
        name: "two_mass".into(),
        model: make_two_mass(),
        n_rb: 1,
        n_flex: 1,
        retain: vec![1],
        p_star: vec![0.0],
        grid: linalg::linspace(0.0, 1.0, 11)
            .into_iter()
            .map(|p| vec![p])
            .collect(),
        f_bw: vec![10.0],
    }
}

const CORNER_MASS: f64 = 0.5;
const CENTER_MASS: f64 = 1.0;
const SENSOR_TRAVEL: f64 = 0.3;

/// Lumped plate: four corner masses at `(+-1, +-1)` and a center mass, with a
/// torsion spring pattern and a saddle spring pattern. Three rigid-body modes
/// (heave, two tilts), torsion at 120 Hz and saddle at 180 Hz. Actuators push
/// the corners; three sensors read the bilinear interpolation of the corner
/// motion at points that translate with `p in [0, 1]^2`.
pub fn make_mmpa_lite() -> MechanicalModel {
    let m = CORNER_MASS;
    let mc = CENTER_MASS;
    let wt = 2.0 * PI * MMPA_F_TORSION;
    let ws = 2.0 * PI * MMPA_F_SADDLE;
    let t = DMatrix::from_column_slice(5, 1, &[1.0, -1.0, 1.0, -1.0, 0.0]);
    let s = DMatrix::from_column_slice(5, 1, &[-0.25, -0.25, -0.25, -0.25, 1.0]);
    let kt = m * wt * wt / 4.0;
    let ks = 4.0 * m * ws * ws / (1.0 + 4.0 * m / mc);
    let ktt = &t * t.transpose() * kt;
    let kss = &s * s.transpose() * ks;
    let k = &ktt + &kss;
    let d = &ktt * (2.0 * MMPA_ZETA / wt) + &kss * (2.0 * MMPA_ZETA / ws);
    let mass = linalg::diag(&[m, m, m, m, mc]);

    let mut phi_a = DMatrix::zeros(5, 4);
    phi_a.view_mut((0, 0), (4, 4)).fill_with_identity();
    let domain = vec![[0.0, 1.0], [0.0, 1.0]];

    // corner order (-,-), (+,-), (+,+), (-,+)
    let corners = [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)];
    let sensors = [(0.6, 0.0), (-0.6, 0.0), (0.0, 0.6)];
    let mut terms: Vec<(Vec<u32>, DMatrix<f64>)> = Vec::new();
    for e in [[0u32, 0u32], [1, 0], [0, 1], [1, 1]] {
        terms.push((e.to_vec(), DMatrix::zeros(3, 5)));
    }
    for (r, &(sx, sy)) in sensors.iter().enumerate() {
        // x = ax + bx p1, y = ay + by p2
        let (ax, bx) = (sx - SENSOR_TRAVEL, 2.0 * SENSOR_TRAVEL);
        let (ay, by) = (sy - SENSOR_TRAVEL, 2.0 * SENSOR_TRAVEL);
        for (c, &(cx, cy)) in corners.iter().enumerate() {
            // (1 + cx x)(1 + cy y) / 4 = (u0 + u1 p1)(v0 + v1 p2) / 4
            let (u0, u1) = (1.0 + cx * ax, cx * bx);
            let (v0, v1) = (1.0 + cy * ay, cy * by);
            terms[0].1[(r, c)] += u0 * v0 / 4.0;
            terms[1].1[(r, c)] += u1 * v0 / 4.0;
            terms[2].1[(r, c)] += u0 * v1 / 4.0;
            terms[3].1[(r, c)] += u1 * v1 / 4.0;
        }
    }
    let phi_s = PositionMap::from_terms(3, 5, domain.clone(), terms).expect("consistent");
    MechanicalModel::new(
        "mmpa_lite",
        mass,
        d,
        k,
        PositionMap::constant(phi_a, domain),
        phi_s,
    )
    .expect("mmpa-lite benchmark is valid")
}

pub fn mmpa_lite_spec() -> BenchmarkSpec {
    let axis = linalg::linspace(0.0, 1.0, 5);
    let grid = axis
        .iter()
        .flat_map(|&a| axis.iter().map(move |&b| vec![a, b]))
        .collect();
    BenchmarkSpec {
        name: "mmpa_lite".into(),
        model: make_mmpa_lite(),
        n_rb: 3,
        n_flex: 1,
        retain: vec![3],
        p_star: vec![0.25, 0.25],
        grid,
        f_bw: vec![15.0, 15.0, 15.0],
    }
}

pub fn by_name(name: &str) -> Result<BenchmarkSpec> {
    match name {
        "two_mass" | "two-mass" => Ok(two_mass_spec()),
        "mmpa_lite" | "mmpa-lite" => Ok(mmpa_lite_spec()),
        other => Err(Error::Config {
            path: "model".into(),
            message: format!("unknown benchmark `{other}`"),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanics::modal_decompose;

    #[test]
    fn two_mass_frequencies() {
        let dec = modal_decompose(&make_two_mass()).unwrap();
        assert_eq!(dec.n_rb, 1);
        let f = dec.frequencies_hz();
        assert!((f[1] - 50.0).abs() / 50.0 < 1e-9);
        assert!((dec.zeta[1] - 0.01).abs() < 1e-12);
    }

    #[test]
    fn two_mass_sensor_endpoint() {
        let m = make_two_mass();
        assert_eq!(
            m.phi_s.eval(&[0.0]).unwrap(),
            DMatrix::from_row_slice(1, 2, &[1.0, 0.0])
        );
    }

    #[test]
    fn mmpa_lite_modes() {
        let dec = modal_decompose(&make_mmpa_lite()).unwrap();
        assert_eq!(dec.n_rb, 3);
        let f = dec.frequencies_hz();
        assert!((f[3] - 120.0).abs() / 120.0 < 1e-6);
        assert!((f[4] - 180.0).abs() / 180.0 < 1e-6);
        assert!((dec.zeta[3] - 0.005).abs() < 1e-9);
    }
}
