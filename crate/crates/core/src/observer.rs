//! Compliance-corrected truncation, output- and error-based modal observers,
//! and the closed flexible loop `Sigma` formed with the band-pass law.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::decoupling::DecouplingPair;
use crate::error::{Error, Result};
use crate::filter::RationalDiagonalFilter;
use crate::linalg;
use crate::mechanics::PartitionedModalModel;
use crate::statespace::{care_solve, CareSolution, Diagram, StateSpaceModel};

/// Rigid-body plus retained flexible dynamics with the static contribution of
/// the discarded modes as feed-through.
#[derive(Debug, Clone)]
pub struct TruncatedModel {
    pub model: StateSpaceModel,
    pub d_o: DMatrix<f64>,
    pub p: Vec<f64>,
    pub n_rb: usize,
    pub n_flex: usize,
}

impl TruncatedModel {
    /// `T_y G^ T_u`; the compliance term is transformed along.
    pub fn decoupled(&self, pair: &DecouplingPair) -> Result<Self> {
        let model = self.model.scale_io(&pair.t_y, &pair.t_u)?;
        let d_o = model.d().clone();
        Ok(Self {
            model,
            d_o,
            p: self.p.clone(),
            n_rb: self.n_rb,
            n_flex: self.n_flex,
        })
    }
}

pub fn truncate_with_compliance(pm: &PartitionedModalModel, p: &[f64]) -> Result<TruncatedModel> {
    let retained = pm.evaluate_retained(p)?;
    let d_o = compliance(pm, p)?;
    let (a, b, c, _) = retained.into_parts();
    Ok(TruncatedModel {
        model: StateSpaceModel::new(a, b, c, d_o.clone())?,
        d_o,
        p: p.to_vec(),
        n_rb: pm.n_rb,
        n_flex: pm.n_flex,
    })
}

/// Static gain of the discarded block, `-C_d A_d^-1 B_d`.
pub fn compliance(pm: &PartitionedModalModel, p: &[f64]) -> Result<DMatrix<f64>> {
    let disc = pm.evaluate_discarded(p)?;
    if disc.nx() == 0 {
        return Ok(DMatrix::zeros(pm.ny(), pm.nu()));
    }
    let lu = disc.a().clone().full_piv_lu();
    let x = lu
        .solve(disc.b())
        .filter(|_| disc.a().clone().try_inverse().is_some())
        .ok_or_else(|| {
            Error::ModeSelection(
                "a discarded mode has zero stiffness; compliance correction undefined".into(),
            )
        })?;
    Ok(-(disc.c() * x))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObserverKind {
    OutputBased,
    ErrorBased,
}

/// Luenberger observer realization mapping `(u, y)` or `(u_FM, e)` to the
/// estimated modal velocities `eta^ = Psi x^`.
#[derive(Debug, Clone)]
pub struct ModalObserver {
    pub kind: ObserverKind,
    pub realization: StateSpaceModel,
    pub l: DMatrix<f64>,
    pub psi: DMatrix<f64>,
    /// Number of leading observer inputs that carry actuation signals.
    pub n_act: usize,
    /// Spectral abscissa of the estimation-error dynamics.
    pub error_abscissa: f64,
}

impl ModalObserver {
    pub fn state_dim(&self) -> usize {
        self.realization.nx()
    }

    pub fn to_json(&self) -> String {
        let doc = ObserverDoc {
            kind: self.kind,
            a: linalg::to_rows(self.realization.a()),
            b: linalg::to_rows(self.realization.b()),
            c: linalg::to_rows(self.realization.c()),
            d: linalg::to_rows(self.realization.d()),
            l: linalg::to_rows(&self.l),
            psi: linalg::to_rows(&self.psi),
            n_act: self.n_act,
            error_abscissa: self.error_abscissa,
        };
        serde_json::to_string_pretty(&doc).expect("serializable")
    }
}

#[derive(Debug, Serialize)]
struct ObserverDoc {
    kind: ObserverKind,
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    b: Vec<Vec<f64>>,
    #[serde(rename = "C")]
    c: Vec<Vec<f64>>,
    #[serde(rename = "D")]
    d: Vec<Vec<f64>>,
    #[serde(rename = "L")]
    l: Vec<Vec<f64>>,
    #[serde(rename = "Psi")]
    psi: Vec<Vec<f64>>,
    n_act: usize,
    error_abscissa: f64,
}

/// Output-based observer on a truncated model: dynamics `A_o - L C_o`,
/// input matrix `[B_o - L D_o, L]` for `(u, y)`.
pub fn build_output_observer(
    tm: &TruncatedModel,
    l: &DMatrix<f64>,
    psi: &DMatrix<f64>,
) -> Result<ModalObserver> {
    let obs = output_observer(tm, l, psi)?;
    warn_if_unstable(&obs);
    Ok(obs)
}

fn warn_if_unstable(obs: &ModalObserver) {
    if obs.error_abscissa >= 0.0 {
        log::warn!(
            "{:?} observer error dynamics are not Hurwitz (abscissa {:e})",
            obs.kind,
            obs.error_abscissa
        );
    }
}

pub(crate) fn output_observer(
    tm: &TruncatedModel,
    l: &DMatrix<f64>,
    psi: &DMatrix<f64>,
) -> Result<ModalObserver> {
    let g = &tm.model;
    let n = g.nx();
    if l.shape() != (n, g.ny()) {
        return Err(Error::dim(
            "output observer",
            format!(
                "L must be {}x{}, got {}x{}",
                n,
                g.ny(),
                l.nrows(),
                l.ncols()
            ),
        ));
    }
    if psi.ncols() != n {
        return Err(Error::dim(
            "output observer",
            "Psi columns must equal the observer state dimension",
        ));
    }
    let a = g.a() - l * g.c();
    let mut b = DMatrix::zeros(n, g.nu() + g.ny());
    b.view_mut((0, 0), (n, g.nu()))
        .copy_from(&(g.b() - l * g.d()));
    b.view_mut((0, g.nu()), (n, g.ny())).copy_from(l);
    let error_abscissa = linalg::spectral_abscissa(&a)?;
    let realization = StateSpaceModel::new(
        a,
        b,
        psi.clone(),
        DMatrix::zeros(psi.nrows(), g.nu() + g.ny()),
    )?;
    Ok(ModalObserver {
        kind: ObserverKind::OutputBased,
        realization,
        l: l.clone(),
        psi: psi.clone(),
        n_act: g.nu(),
        error_abscissa,
    })
}

/// Flexible-only data of the error-based observer in decoupled coordinates:
/// `(A_f, B_f, C_f, D_f)` with inputs the flexible channels of `pair` and
/// output the decoupled sensor signal.
pub fn flexible_subsystem(
    pm: &PartitionedModalModel,
    p: &[f64],
    pair: &DecouplingPair,
) -> Result<StateSpaceModel> {
    let n_ch = pair.n_ch();
    if n_ch < pm.n_rb + pair.n_flex || pair.n_flex == 0 {
        return Err(Error::dim(
            "error observer",
            "decoupling pair carries no flexible input channels",
        ));
    }
    let cols: Vec<usize> = (pm.n_rb..pm.n_rb + pair.n_flex).collect();
    let t_f = pair.t_u.select_columns(&cols);
    let b = pm.b_fm_r.eval(p)? * &t_f;
    let c = &pair.t_y * pm.c_fm_r.eval(p)?;
    let d = &pair.t_y * compliance(pm, p)? * &t_f;
    StateSpaceModel::new(pm.a_fm_r.clone(), b, c, d)
}

/// Error-based observer over the retained flexible states with `e ~ -y_flex`:
/// `x^' = (A_f + L C_f) x^ + (B_f + L D_f) u_FM + L e`.
pub fn build_error_observer(
    pm: &PartitionedModalModel,
    p: &[f64],
    pair: &DecouplingPair,
    l: &DMatrix<f64>,
    psi: &DMatrix<f64>,
) -> Result<ModalObserver> {
    let obs = error_observer(pm, p, pair, l, psi)?;
    warn_if_unstable(&obs);
    Ok(obs)
}

pub(crate) fn error_observer(
    pm: &PartitionedModalModel,
    p: &[f64],
    pair: &DecouplingPair,
    l: &DMatrix<f64>,
    psi: &DMatrix<f64>,
) -> Result<ModalObserver> {
    let f = flexible_subsystem(pm, p, pair)?;
    let n = f.nx();
    if l.shape() != (n, f.ny()) {
        return Err(Error::dim(
            "error observer",
            format!(
                "L must be {}x{}, got {}x{}",
                n,
                f.ny(),
                l.nrows(),
                l.ncols()
            ),
        ));
    }
    if psi.ncols() != n {
        return Err(Error::dim(
            "error observer",
            "Psi columns must equal the observer state dimension",
        ));
    }
    let a = f.a() + l * f.c();
    let mut b = DMatrix::zeros(n, f.nu() + f.ny());
    b.view_mut((0, 0), (n, f.nu()))
        .copy_from(&(f.b() + l * f.d()));
    b.view_mut((0, f.nu()), (n, f.ny())).copy_from(l);
    let error_abscissa = linalg::spectral_abscissa(&a)?;
    let realization = StateSpaceModel::new(
        a,
        b,
        psi.clone(),
        DMatrix::zeros(psi.nrows(), f.nu() + f.ny()),
    )?;
    Ok(ModalObserver {
        kind: ObserverKind::ErrorBased,
        realization,
        l: l.clone(),
        psi: psi.clone(),
        n_act: f.nu(),
        error_abscissa,
    })
}

/// Riccati-based gain for the output observer: `Q = q I`, `V = v I`.
pub fn output_observer_gain(tm: &TruncatedModel, q: f64, v: f64) -> Result<CareSolution> {
    let g = &tm.model;
    care_solve(
        g.a(),
        g.c(),
        &(DMatrix::identity(g.nx(), g.nx()) * q),
        &(DMatrix::identity(g.ny(), g.ny()) * v),
    )
}

/// Riccati-based gain for the error observer; the measured map is `-C_f`.
pub fn error_observer_gain(
    pm: &PartitionedModalModel,
    p: &[f64],
    pair: &DecouplingPair,
    q: f64,
    v: f64,
) -> Result<CareSolution> {
    let f = flexible_subsystem(pm, p, pair)?;
    care_solve(
        f.a(),
        &(-f.c()),
        &(DMatrix::identity(f.nx(), f.nx()) * q),
        &(DMatrix::identity(f.ny(), f.ny()) * v),
    )
}

/// Rows selecting the velocity states of `controlled` (indices into the
/// retained flexible modes).
pub fn selection_matrix(
    pm: &PartitionedModalModel,
    controlled: &[usize],
    kind: ObserverKind,
) -> Result<DMatrix<f64>> {
    let (offset, n) = match kind {
        ObserverKind::OutputBased => (pm.n_rb, pm.n_rb + pm.n_flex),
        ObserverKind::ErrorBased => (0, pm.n_flex),
    };
    let mut psi = DMatrix::zeros(controlled.len(), 2 * n);
    for (r, &m) in controlled.iter().enumerate() {
        if m >= pm.n_flex {
            return Err(Error::ModeSelection(format!(
                "controlled mode {m} is not among the {} retained modes",
                pm.n_flex
            )));
        }
        psi[(r, 2 * (offset + m) + 1)] = 1.0;
    }
    Ok(psi)
}

/// `Sigma = (I - K_FM O_u)^-1 K_FM O_e`, mapping `e` to `u_FM`.
pub fn sigma_subsystem(
    obs: &ModalObserver,
    kfm: &RationalDiagonalFilter,
) -> Result<StateSpaceModel> {
    let n_act = obs.n_act;
    let n_e = obs.realization.nu() - n_act;
    let k = kfm.to_ss()?;
    if k.nu() != obs.psi.nrows() || k.ny() != n_act {
        return Err(Error::dim(
            "sigma",
            "K_FM must map the estimated velocities onto the actuation inputs",
        ));
    }
    let mut dg = Diagram::new();
    dg.input("e", n_e)?;
    dg.block("obs", obs.realization.clone())?;
    dg.block("kfm", k)?;
    dg.feed_at("obs", 0, "kfm", DMatrix::identity(n_act, n_act))?;
    dg.feed_at("obs", n_act, "e", DMatrix::identity(n_e, n_e))?;
    dg.feed(
        "kfm",
        "obs",
        DMatrix::identity(obs.psi.nrows(), obs.psi.nrows()),
    )?;
    dg.output("u_fm", &[("kfm", DMatrix::identity(n_act, n_act))])?;
    dg.build()
}
