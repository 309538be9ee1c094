use std::collections::HashMap;

use nalgebra::DMatrix;

use super::StateSpaceModel;
use crate::error::{Error, Result};
use crate::linalg;

/// Cascade: the output of `g1` drives `g2`, giving the transfer `G2 * G1`.
pub fn series(g1: &StateSpaceModel, g2: &StateSpaceModel) -> Result<StateSpaceModel> {
    if g1.ny() != g2.nu() {
        return Err(Error::dim(
            "series",
            format!("G1 has {} outputs, G2 has {} inputs", g1.ny(), g2.nu()),
        ));
    }
    let (n1, n2) = (g1.nx(), g2.nx());
    let mut a = DMatrix::zeros(n1 + n2, n1 + n2);
    a.view_mut((0, 0), (n1, n1)).copy_from(g1.a());
    a.view_mut((n1, 0), (n2, n1)).copy_from(&(g2.b() * g1.c()));
    a.view_mut((n1, n1), (n2, n2)).copy_from(g2.a());
    let mut b = DMatrix::zeros(n1 + n2, g1.nu());
    b.view_mut((0, 0), (n1, g1.nu())).copy_from(g1.b());
    b.view_mut((n1, 0), (n2, g1.nu()))
        .copy_from(&(g2.b() * g1.d()));
    let mut c = DMatrix::zeros(g2.ny(), n1 + n2);
    c.view_mut((0, 0), (g2.ny(), n1))
        .copy_from(&(g2.d() * g1.c()));
    c.view_mut((0, n1), (g2.ny(), n2)).copy_from(g2.c());
    StateSpaceModel::new(a, b, c, g2.d() * g1.d())
}

/// Sum of two systems sharing inputs and outputs.
pub fn parallel(g1: &StateSpaceModel, g2: &StateSpaceModel) -> Result<StateSpaceModel> {
    if g1.nu() != g2.nu() || g1.ny() != g2.ny() {
        return Err(Error::dim(
            "parallel",
            "systems have different input/output counts",
        ));
    }
    let a = linalg::block_diag(&[g1.a(), g2.a()]);
    let b = stack_rows(g1.b(), g2.b());
    let c = stack_cols(g1.c(), g2.c());
    StateSpaceModel::new(a, b, c, g1.d() + g2.d())
}

/// Block-diagonal concatenation: inputs and outputs are stacked.
pub fn append(systems: &[&StateSpaceModel]) -> Result<StateSpaceModel> {
    let a = linalg::block_diag(&systems.iter().map(|g| g.a()).collect::<Vec<_>>());
    let b = linalg::block_diag(&systems.iter().map(|g| g.b()).collect::<Vec<_>>());
    let c = linalg::block_diag(&systems.iter().map(|g| g.c()).collect::<Vec<_>>());
    let d = linalg::block_diag(&systems.iter().map(|g| g.d()).collect::<Vec<_>>());
    StateSpaceModel::new(a, b, c, d)
}

/// Closes `u1 = r + sign * G2 y1` around `G1`; the result maps `r` to `y1`.
/// `sign = -1.0` is ordinary negative feedback.
pub fn feedback(g1: &StateSpaceModel, g2: &StateSpaceModel, sign: f64) -> Result<StateSpaceModel> {
    if g2.nu() != g1.ny() || g2.ny() != g1.nu() {
        return Err(Error::dim(
            "feedback",
            "G2 must map G1 outputs back to G1 inputs",
        ));
    }
    let mut dg = Diagram::new();
    dg.input("r", g1.nu())?;
    dg.block("g1", g1.clone())?;
    dg.block("g2", g2.clone())?;
    dg.feed("g1", "r", DMatrix::identity(g1.nu(), g1.nu()))?;
    dg.feed("g1", "g2", DMatrix::identity(g1.nu(), g1.nu()) * sign)?;
    dg.feed("g2", "g1", DMatrix::identity(g1.ny(), g1.ny()))?;
    dg.output("y", &[("g1", DMatrix::identity(g1.ny(), g1.ny()))])?;
    dg.build()
}

fn stack_rows(top: &DMatrix<f64>, bottom: &DMatrix<f64>) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(top.nrows() + bottom.nrows(), top.ncols());
    m.view_mut((0, 0), top.shape()).copy_from(top);
    m.view_mut((top.nrows(), 0), bottom.shape())
        .copy_from(bottom);
    m
}

fn stack_cols(left: &DMatrix<f64>, right: &DMatrix<f64>) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(left.nrows(), left.ncols() + right.ncols());
    m.view_mut((0, 0), left.shape()).copy_from(left);
    m.view_mut((0, left.ncols()), right.shape())
        .copy_from(right);
    m
}

#[derive(Debug, Clone, Copy)]
enum Source {
    External { offset: usize, width: usize },
    Block { index: usize },
}

/// Named-signal block diagram that reduces to a single state-space realization.
///
/// Every block output is a signal named after the block. Block inputs and
/// diagram outputs are linear combinations `sum_k gain_k * signal_k`.
/// Algebraic loops are resolved exactly; a singular loop is an error.
#[derive(Debug, Clone, Default)]
pub struct Diagram {
    signals: HashMap<String, Source>,
    n_ext: usize,
    blocks: Vec<(String, StateSpaceModel)>,
    feeds: Vec<(usize, usize, String, DMatrix<f64>)>,
    outputs: Vec<(String, usize, Vec<(String, DMatrix<f64>)>)>,
}

impl Diagram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn input(&mut self, name: &str, width: usize) -> Result<&mut Self> {
        self.claim(name)?;
        self.signals.insert(
            name.to_string(),
            Source::External {
                offset: self.n_ext,
                width,
            },
        );
        self.n_ext += width;
        Ok(self)
    }

    pub fn block(&mut self, name: &str, model: StateSpaceModel) -> Result<&mut Self> {
        self.claim(name)?;
        self.signals.insert(
            name.to_string(),
            Source::Block {
                index: self.blocks.len(),
            },
        );
        self.blocks.push((name.to_string(), model));
        Ok(self)
    }

    /// Adds `gain * signal` to the whole input vector of `block`.
    pub fn feed(&mut self, block: &str, signal: &str, gain: DMatrix<f64>) -> Result<&mut Self> {
        self.feed_at(block, 0, signal, gain)
    }

    /// Adds `gain * signal` to block inputs `offset .. offset + gain.nrows()`.
    pub fn feed_at(
        &mut self,
        block: &str,
        offset: usize,
        signal: &str,
        gain: DMatrix<f64>,
    ) -> Result<&mut Self> {
        let bi = self.block_index(block)?;
        let nu = self.blocks[bi].1.nu();
        if offset + gain.nrows() > nu {
            return Err(Error::dim(
                "diagram",
                format!("feed into `{block}` exceeds its {nu} inputs"),
            ));
        }
        if gain.ncols() != self.width(signal)? {
            return Err(Error::dim(
                "diagram",
                format!(
                    "gain for `{signal}` -> `{block}` has {} columns, signal width {}",
                    gain.ncols(),
                    self.width(signal)?
                ),
            ));
        }
        self.feeds.push((bi, offset, signal.to_string(), gain));
        Ok(self)
    }

    /// Declares an external output formed from weighted signals.
    pub fn output(&mut self, name: &str, terms: &[(&str, DMatrix<f64>)]) -> Result<&mut Self> {
        let width = terms.first().map(|(_, g)| g.nrows()).unwrap_or(0);
        for (signal, gain) in terms {
            if gain.nrows() != width || gain.ncols() != self.width(signal)? {
                return Err(Error::dim(
                    "diagram",
                    format!("output `{name}` term `{signal}` has wrong shape"),
                ));
            }
        }
        let owned = terms
            .iter()
            .map(|(s, g)| (s.to_string(), g.clone()))
            .collect();
        self.outputs.push((name.to_string(), width, owned));
        Ok(self)
    }

    pub fn width(&self, signal: &str) -> Result<usize> {
        match self.signals.get(signal) {
            Some(Source::External { width, .. }) => Ok(*width),
            Some(Source::Block { index }) => Ok(self.blocks[*index].1.ny()),
            None => Err(Error::dim("diagram", format!("unknown signal `{signal}`"))),
        }
    }

    fn claim(&self, name: &str) -> Result<()> {
        if self.signals.contains_key(name) {
            return Err(Error::dim(
                "diagram",
                format!("duplicate signal name `{name}`"),
            ));
        }
        Ok(())
    }

    fn block_index(&self, name: &str) -> Result<usize> {
        match self.signals.get(name) {
            Some(Source::Block { index }) => Ok(*index),
            _ => Err(Error::dim("diagram", format!("`{name}` is not a block"))),
        }
    }

    /// Reduces the diagram to `w -> z`, inputs in declaration order, outputs likewise.
    pub fn build(&self) -> Result<StateSpaceModel> {
        let nb = self.blocks.len();
        let mut x_off = vec![0; nb + 1];
        let mut u_off = vec![0; nb + 1];
        let mut y_off = vec![0; nb + 1];
        for (k, (_, g)) in self.blocks.iter().enumerate() {
            x_off[k + 1] = x_off[k] + g.nx();
            u_off[k + 1] = u_off[k] + g.nu();
            y_off[k + 1] = y_off[k] + g.ny();
        }
        let (nx, nu, ny, nw) = (x_off[nb], u_off[nb], y_off[nb], self.n_ext);
        let nz: usize = self.outputs.iter().map(|o| o.1).sum();

        let blocks: Vec<&StateSpaceModel> = self.blocks.iter().map(|(_, g)| g).collect();
        let a = linalg::block_diag(&blocks.iter().map(|g| g.a()).collect::<Vec<_>>());
        let b = linalg::block_diag(&blocks.iter().map(|g| g.b()).collect::<Vec<_>>());
        let c = linalg::block_diag(&blocks.iter().map(|g| g.c()).collect::<Vec<_>>());
        let d = linalg::block_diag(&blocks.iter().map(|g| g.d()).collect::<Vec<_>>());

        // u = Q y + E w, z = Fy y + Fw w
        let mut q = DMatrix::zeros(nu, ny);
        let mut e = DMatrix::zeros(nu, nw);
        for (bi, offset, signal, gain) in &self.feeds {
            let row = u_off[*bi] + offset;
            self.place(&mut q, &mut e, row, signal, gain, &y_off)?;
        }
        let mut fy = DMatrix::zeros(nz, ny);
        let mut fw = DMatrix::zeros(nz, nw);
        let mut row = 0;
        for (_, width, terms) in &self.outputs {
            for (signal, gain) in terms {
                self.place(&mut fy, &mut fw, row, signal, gain, &y_off)?;
            }
            row += width;
        }

        let loop_matrix = DMatrix::identity(ny, ny) - &d * &q;
        let h = if ny == 0 {
            DMatrix::zeros(0, 0)
        } else {
            let lu = loop_matrix.clone().full_piv_lu();
            let inv = lu.try_inverse().ok_or(Error::AlgebraicLoop("diagram"))?;
            let cond = loop_matrix.norm() * inv.norm();
            if !cond.is_finite() || cond > 1e14 {
                return Err(Error::AlgebraicLoop("diagram"));
            }
            inv
        };
        let qh = &q * &h;
        let a_cl = &a + &b * &qh * &c;
        let b_cl = &b * (&qh * &d * &e + &e);
        let c_cl = &fy * &h * &c;
        let d_cl = &fy * &h * &d * &e + &fw;
        let _ = nx;

        let mut in_labels = vec![String::new(); nw];
        let mut out_labels = Vec::with_capacity(nz);
        for (name, src) in &self.signals {
            if let Source::External { offset, width } = src {
                for k in 0..*width {
                    in_labels[offset + k] = channel_label(name, k, *width);
                }
            }
        }
        for (name, width, _) in &self.outputs {
            out_labels.extend((0..*width).map(|k| channel_label(name, k, *width)));
        }
        StateSpaceModel::new(a_cl, b_cl, c_cl, d_cl)?.with_labels(in_labels, out_labels)
    }

    fn place(
        &self,
        to_y: &mut DMatrix<f64>,
        to_w: &mut DMatrix<f64>,
        row: usize,
        signal: &str,
        gain: &DMatrix<f64>,
        y_off: &[usize],
    ) -> Result<()> {
        let rows = gain.nrows();
        match self.signals.get(signal) {
            Some(Source::External { offset, width }) => {
                let mut v = to_w.view_mut((row, *offset), (rows, *width));
                v += gain;
            }
            Some(Source::Block { index }) => {
                let width = y_off[index + 1] - y_off[*index];
                let mut v = to_y.view_mut((row, y_off[*index]), (rows, width));
                v += gain;
            }
            None => return Err(Error::dim("diagram", format!("unknown signal `{signal}`"))),
        }
        Ok(())
    }
}

fn channel_label(name: &str, k: usize, width: usize) -> String {
    if width == 1 {
        name.to_string()
    } else {
        format!("{name}[{k}]")
    }
}
