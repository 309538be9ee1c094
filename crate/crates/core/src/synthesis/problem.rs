use std::ops::Range;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use super::params::{KrbChannel, StructuredControllerParams};
use super::plant::DesignPlant;
use crate::error::{Error, Result};
use crate::filter::RationalDiagonalFilter;
use crate::observer::{
    error_observer, error_observer_gain, output_observer, output_observer_gain, selection_matrix,
    sigma_subsystem, ModalObserver, ObserverKind,
};
use crate::shaping::{
    compute_scalings, make_kfm, BlockLayout, FlexControllerParams, ScalingSet, ShapingFilterSet,
    ShapingParams,
};
use crate::statespace::{hinf_norm_with, Diagram, HinfOptions, StateSpaceModel};

/// Row/column ranges of the weighted channels in `M`. Columns `d` and row `s`
/// carry the unweighted output sensitivity and are not part of the objective.
#[derive(Debug, Clone, Serialize)]
pub struct ChannelMap {
    pub z1: Range<usize>,
    pub z2: Range<usize>,
    pub w1: Range<usize>,
    pub w2: Range<usize>,
    pub w3: Option<Range<usize>>,
    pub d: Range<usize>,
    pub s: Range<usize>,
}

impl ChannelMap {
    pub fn z(&self) -> Vec<usize> {
        (self.z1.start..self.z2.end).collect()
    }

    pub fn w(&self) -> Vec<usize> {
        let end = self.w3.as_ref().map_or(self.w2.end, |r| r.end);
        (self.w1.start..end).collect()
    }

    /// Input columns of the flexible-mode shaping channel.
    pub fn flex_cols(&self) -> Vec<usize> {
        self.w3.clone().unwrap_or(self.w2.clone()).collect()
    }

    /// Input columns carrying rigid-body loop shaping.
    pub fn rb_cols(&self) -> Vec<usize> {
        match &self.w3 {
            Some(_) => (self.w1.start..self.w2.end).collect(),
            None => self.w1.clone().collect(),
        }
    }
}

/// Weighted closed loop at one parameter value.
#[derive(Debug, Clone)]
pub struct ClosedLoopMap {
    pub layout: BlockLayout,
    /// Realization including the sensitivity port.
    pub full: StateSpaceModel,
    pub channels: ChannelMap,
}

impl ClosedLoopMap {
    /// The weighted map `M` of the objective.
    pub fn m(&self) -> Result<StateSpaceModel> {
        self.full.select(&self.channels.z(), &self.channels.w())
    }

    pub fn columns(&self, cols: &[usize]) -> Result<StateSpaceModel> {
        self.full.select(&self.channels.z(), cols)
    }

    /// Unweighted output sensitivity of the scaled loop.
    pub fn sensitivity(&self) -> Result<StateSpaceModel> {
        self.full.select(
            &self.channels.s.clone().collect::<Vec<_>>(),
            &self.channels.d.clone().collect::<Vec<_>>(),
        )
    }

    pub fn norm(&self, cols: &[usize], opts: &HinfOptions) -> Result<f64> {
        Ok(hinf_norm_with(&self.columns(cols)?, opts)?.value)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GridCertificate {
    pub points: Vec<Vec<f64>>,
    pub hurwitz: Vec<bool>,
    /// Spectral abscissa of each closed loop.
    pub abscissa: Vec<f64>,
}

impl GridCertificate {
    pub fn all_stable(&self) -> bool {
        self.hurwitz.iter().all(|h| *h)
    }

    pub fn worst_abscissa(&self) -> f64 {
        self.abscissa
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum WeightMode {
    Weighted,
    Unit,
}

/// Generalized plant of the 6-block (output-based observer) or 4-block
/// (error-based observer) interconnection, bound to its fixed data.
#[derive(Debug, Clone)]
pub struct SynthesisProblem {
    pub layout: BlockLayout,
    pub plant: DesignPlant,
    pub scalings: ScalingSet,
    pub weights: ShapingFilterSet,
    /// Band-pass centers (rad/s) and shared `Q` of `K_FM`.
    pub kfm_omega: Vec<f64>,
    pub kfm_q: f64,
    pub psi: DMatrix<f64>,
    pub hinf: HinfOptions,
    /// Required decay rate of every frozen closed loop (1/s).
    pub stability_margin: f64,
    locals: Vec<StateSpaceModel>,
    weight_ss: [StateSpaceModel; 5],
    unit_ss: [StateSpaceModel; 5],
}

fn filter_ss(f: &RationalDiagonalFilter) -> Result<StateSpaceModel> {
    f.to_ss()
}

impl SynthesisProblem {
    pub fn six_block(
        plant: DesignPlant,
        params: &ShapingParams,
        expected_error: &[f64],
    ) -> Result<Self> {
        let weights = ShapingFilterSet::six_block(params)?;
        Self::new(BlockLayout::Six, plant, weights, expected_error)
    }

    pub fn four_block(
        plant: DesignPlant,
        params: &ShapingParams,
        expected_error: &[f64],
    ) -> Result<Self> {
        let weights = ShapingFilterSet::four_block(params)?;
        Self::new(BlockLayout::Four, plant, weights, expected_error)
    }

    pub fn new(
        layout: BlockLayout,
        plant: DesignPlant,
        weights: ShapingFilterSet,
        expected_error: &[f64],
    ) -> Result<Self> {
        let n_rb = plant.n_rb();
        let n_fl = plant.n_flex();
        if n_fl == 0 {
            return Err(Error::ModeSelection(
                "co-design needs at least one retained flexible mode".into(),
            ));
        }
        if weights.params.f_bw.len() != n_rb {
            return Err(Error::dim(
                "synthesis",
                format!(
                    "{} bandwidths for {n_rb} rigid-body channels",
                    weights.params.f_bw.len()
                ),
            ));
        }
        if weights.params.flex.len() != n_fl {
            return Err(Error::dim(
                "synthesis",
                format!(
                    "{} flexible weights for {n_fl} retained modes",
                    weights.params.flex.len()
                ),
            ));
        }
        let scalings = compute_scalings(&plant.nominal, &weights.params.f_bw, expected_error)?;
        let kind = match layout {
            BlockLayout::Six => ObserverKind::OutputBased,
            BlockLayout::Four => ObserverKind::ErrorBased,
        };
        let controlled: Vec<usize> = (0..n_fl).collect();
        let psi = selection_matrix(&plant.pm, &controlled, kind)?;
        let kfm_omega = plant.flexible_omegas();
        let kfm_q = weights.params.flex[0].q;
        let locals = plant.locals()?;
        let ww3 = weights
            .ww3
            .clone()
            .unwrap_or_else(|| RationalDiagonalFilter::identity(n_fl));
        let weight_ss = [
            filter_ss(&weights.wz1_reg)?,
            filter_ss(&weights.wz2)?,
            filter_ss(&weights.ww1)?,
            filter_ss(&weights.ww2)?,
            filter_ss(&ww3)?,
        ];
        let unit_ss = [
            StateSpaceModel::identity(n_rb),
            StateSpaceModel::identity(n_rb),
            StateSpaceModel::identity(n_rb),
            StateSpaceModel::identity(weights.ww2.len()),
            StateSpaceModel::identity(n_fl),
        ];
        Ok(Self {
            layout,
            plant,
            scalings,
            weights,
            kfm_omega,
            kfm_q,
            psi,
            hinf: HinfOptions::default(),
            stability_margin: 1e-2,
            locals,
            weight_ss,
            unit_ss,
        })
    }

    pub fn n_rb(&self) -> usize {
        self.plant.n_rb()
    }

    pub fn n_flex(&self) -> usize {
        self.plant.n_flex()
    }

    pub fn locals(&self) -> &[StateSpaceModel] {
        &self.locals
    }

    /// `K_RB` heuristic, Riccati gain `L` with `Q = q I`, `V = v I`, and `xi = 0`.
    pub fn initial_params(&self, care_q: f64, care_v: f64) -> Result<StructuredControllerParams> {
        let krb = self
            .weights
            .params
            .f_bw
            .iter()
            .map(|&f| KrbChannel::heuristic(f, 1.0))
            .collect();
        let l = match self.layout {
            BlockLayout::Six => output_observer_gain(&self.plant.truncated, care_q, care_v)?.l,
            BlockLayout::Four => {
                error_observer_gain(
                    &self.plant.pm,
                    &self.plant.p_star,
                    &self.plant.pair,
                    care_q,
                    care_v,
                )?
                .l
            }
        };
        Ok(StructuredControllerParams {
            krb,
            l,
            xi: vec![0.0; self.n_flex()],
        })
    }

    /// Optimizer scale for `xi`: `2 zeta w` of each controlled mode.
    pub fn xi_scale(&self) -> Vec<f64> {
        self.plant
            .flexible_omegas()
            .iter()
            .zip(self.plant.flexible_zetas())
            .map(|(w, z)| (2.0 * z * w).max(1e-3 * w))
            .collect()
    }

    pub fn kfm(&self, params: &StructuredControllerParams) -> Result<RationalDiagonalFilter> {
        make_kfm(&FlexControllerParams {
            xi: params.xi.clone(),
            omega: self.kfm_omega.clone(),
            q: self.kfm_q,
        })
    }

    pub fn observer(&self, params: &StructuredControllerParams) -> Result<ModalObserver> {
        match self.layout {
            BlockLayout::Six => output_observer(&self.plant.truncated, &params.l, &self.psi),
            BlockLayout::Four => error_observer(
                &self.plant.pm,
                &self.plant.p_star,
                &self.plant.pair,
                &params.l,
                &self.psi,
            ),
        }
    }

    pub fn check_params(&self, params: &StructuredControllerParams) -> Result<()> {
        if params.krb.len() != self.n_rb() || params.xi.len() != self.n_flex() {
            return Err(Error::dim(
                "controller parameters",
                "K_RB channels or xi count do not match the plant",
            ));
        }
        Ok(())
    }

    fn diagram(
        &self,
        params: &StructuredControllerParams,
        g: &StateSpaceModel,
        mode: WeightMode,
    ) -> Result<(Diagram, ChannelMap)> {
        self.check_params(params)?;
        let n_rb = self.n_rb();
        let n_fl = self.n_flex();
        let ws = match mode {
            WeightMode::Weighted => &self.weight_ss,
            WeightMode::Unit => &self.unit_ss,
        };
        let krb = params.krb_filter()?.to_ss()?;
        let kfm = self.kfm(params)?.to_ss()?;
        let obs = self.observer(params)?;
        let wz = self.scalings.wz();
        let wz_inv = DMatrix::from_diagonal(
            &self
                .scalings
                .wz_sc
                .iter()
                .map(|v| 1.0 / v)
                .collect::<Vec<_>>()
                .into(),
        );
        let ww1 = self.scalings.ww1();
        let ww2 = self.scalings.ww2();
        let i_rb = DMatrix::<f64>::identity(n_rb, n_rb);
        let i_fl = DMatrix::<f64>::identity(n_fl, n_fl);

        let mut dg = Diagram::new();
        let channels = self.channel_map();
        match self.layout {
            BlockLayout::Six => {
                dg.input("w1", n_rb)?
                    .input("w2", n_rb)?
                    .input("w3", n_fl)?
                    .input("d", n_rb)?;
                dg.block("G", g.clone())?
                    .block("krb", krb)?
                    .block("obs", obs.realization.clone())?
                    .block("kfm", kfm)?
                    .block("wz1", ws[0].clone())?
                    .block("wz2", ws[1].clone())?
                    .block("ww1", ws[2].clone())?
                    .block("ww2", ws[3].clone())?
                    .block("ww3", ws[4].clone())?;
                dg.feed("ww1", "w1", i_rb.clone())?
                    .feed("ww2", "w2", i_rb.clone())?
                    .feed("ww3", "w3", i_fl.clone())?;
                // e = -(Wz y + d) - Ww1 w1
                for b in ["krb", "wz1"] {
                    dg.feed(b, "G", -&wz)?
                        .feed(b, "d", -&i_rb)?
                        .feed(b, "ww1", -&i_rb)?;
                }
                // u1 = Ww1_sc (v + Ww2 w2), u2 = u2c + Ww2_sc Ww3 w3
                dg.feed_at("G", 0, "krb", ww1.clone())?
                    .feed_at("G", 0, "ww2", ww1.clone())?;
                dg.feed_at("G", n_rb, "kfm", i_fl.clone())?.feed_at(
                    "G",
                    n_rb,
                    "ww3",
                    ww2.clone(),
                )?;
                dg.feed_at("obs", 0, "krb", ww1.clone())?
                    .feed_at("obs", 0, "ww2", ww1.clone())?;
                dg.feed_at("obs", n_rb, "kfm", i_fl.clone())?;
                dg.feed_at("obs", n_rb + n_fl, "G", i_rb.clone())?.feed_at(
                    "obs",
                    n_rb + n_fl,
                    "d",
                    wz_inv.clone(),
                )?;
                dg.feed("kfm", "obs", i_fl.clone())?;
                dg.feed("wz2", "krb", i_rb.clone())?;
                dg.output("z1", &[("wz1", i_rb.clone())])?;
                dg.output("z2", &[("wz2", i_rb.clone())])?;
                dg.output("s", &[("G", wz.clone()), ("d", i_rb.clone())])?;
            }
            BlockLayout::Four => {
                let sigma = sigma_subsystem(&obs, &self.kfm(params)?)?;
                dg.input("w1", n_rb)?.input("w2", n_fl)?.input("d", n_rb)?;
                dg.block("G", g.clone())?
                    .block("krb", krb)?
                    .block("sigma", sigma)?
                    .block("wz1", ws[0].clone())?
                    .block("wz2", ws[1].clone())?
                    .block("ww1", ws[2].clone())?
                    .block("ww2", ws[3].clone())?;
                dg.feed("ww1", "w1", i_rb.clone())?
                    .feed("ww2", "w2", i_fl.clone())?;
                // e_s = -(Wz y + d), e = -(y + Wz^-1 d)
                dg.feed("krb", "G", -&wz)?.feed("krb", "d", -&i_rb)?;
                dg.feed("sigma", "G", -&i_rb)?
                    .feed("sigma", "d", -&wz_inv)?;
                dg.feed_at("G", 0, "krb", ww1.clone())?
                    .feed_at("G", 0, "ww1", ww1.clone())?;
                dg.feed_at("G", n_rb, "sigma", i_fl.clone())?.feed_at(
                    "G",
                    n_rb,
                    "ww2",
                    ww2.clone(),
                )?;
                dg.feed("wz1", "G", wz.clone())?;
                dg.feed("wz2", "krb", i_rb.clone())?;
                dg.output("z1", &[("wz1", i_rb.clone())])?;
                dg.output("z2", &[("wz2", i_rb.clone())])?;
                dg.output("s", &[("G", wz.clone()), ("d", i_rb.clone())])?;
            }
        }
        Ok((dg, channels))
    }

    /// Weighted closed loop around the nominal plant.
    pub fn closed_loop(&self, params: &StructuredControllerParams) -> Result<ClosedLoopMap> {
        self.closed_loop_at(params, &self.plant.nominal)
    }

    /// Weighted closed loop around an arbitrary decoupled plant model.
    pub fn closed_loop_at(
        &self,
        params: &StructuredControllerParams,
        g: &StateSpaceModel,
    ) -> Result<ClosedLoopMap> {
        let (dg, channels) = self.diagram(params, g, WeightMode::Weighted)?;
        Ok(ClosedLoopMap {
            layout: self.layout,
            full: dg.build()?,
            channels,
        })
    }

    /// Unweighted loop (unit weights) around `g`; its poles are the closed-loop poles.
    pub fn feedback_loop(
        &self,
        params: &StructuredControllerParams,
        g: &StateSpaceModel,
    ) -> Result<ClosedLoopMap> {
        let (dg, channels) = self.diagram(params, g, WeightMode::Unit)?;
        Ok(ClosedLoopMap {
            layout: self.layout,
            full: dg.build()?,
            channels,
        })
    }

    /// Loop broken at the measurement shared by `K_RB` and the observer, in
    /// scaled output units, so that the sensitivity is `S = (I + L)^-1`.
    pub fn rb_loop_gain(
        &self,
        params: &StructuredControllerParams,
        g: &StateSpaceModel,
    ) -> Result<StateSpaceModel> {
        self.check_params(params)?;
        let n_rb = self.n_rb();
        let n_fl = self.n_flex();
        let krb = params.krb_filter()?.to_ss()?;
        let obs = self.observer(params)?;
        let wz = self.scalings.wz();
        let wz_inv = DMatrix::from_diagonal(
            &self
                .scalings
                .wz_sc
                .iter()
                .map(|v| 1.0 / v)
                .collect::<Vec<_>>()
                .into(),
        );
        let ww1 = self.scalings.ww1();
        let i_rb = DMatrix::<f64>::identity(n_rb, n_rb);
        let i_fl = DMatrix::<f64>::identity(n_fl, n_fl);
        let mut dg = Diagram::new();
        dg.input("v", n_rb)?;
        dg.block("G", g.clone())?.block("krb", krb)?;
        dg.feed("krb", "v", -&i_rb)?
            .feed_at("G", 0, "krb", ww1.clone())?;
        match self.layout {
            BlockLayout::Six => {
                dg.block("obs", obs.realization.clone())?
                    .block("kfm", self.kfm(params)?.to_ss()?)?;
                dg.feed_at("G", n_rb, "kfm", i_fl.clone())?;
                dg.feed_at("obs", 0, "krb", ww1.clone())?;
                dg.feed_at("obs", n_rb, "kfm", i_fl.clone())?;
                dg.feed_at("obs", n_rb + n_fl, "v", wz_inv.clone())?;
                dg.feed("kfm", "obs", i_fl.clone())?;
            }
            BlockLayout::Four => {
                dg.block("sigma", sigma_subsystem(&obs, &self.kfm(params)?)?)?;
                dg.feed_at("G", n_rb, "sigma", i_fl.clone())?;
                dg.feed("sigma", "v", -&wz_inv)?;
            }
        }
        dg.output("l", &[("G", -&wz)])?;
        dg.build()
    }

    /// Physical tracking error `r - y` driven by the reference `r` and a force
    /// `f` on the flexible decoupled channels.
    pub fn tracking_model(
        &self,
        params: &StructuredControllerParams,
        g: &StateSpaceModel,
    ) -> Result<StateSpaceModel> {
        let cl = self.feedback_loop(params, g)?;
        let ch = &cl.channels;
        let wz = self.scalings.wz();
        let wz_inv = DMatrix::from_diagonal(
            &self
                .scalings
                .wz_sc
                .iter()
                .map(|v| 1.0 / v)
                .collect::<Vec<_>>()
                .into(),
        );
        let n_fl = self.n_flex();
        let i_fl = DMatrix::<f64>::identity(n_fl, n_fl);
        let (m, out_gain) = match self.layout {
            // e = -(Wz y) - w1 with w1 = -Wz r
            BlockLayout::Six => {
                let cols: Vec<usize> = ch.w1.clone().chain(ch.flex_cols()).collect();
                (
                    cl.full.select(&ch.z1.clone().collect::<Vec<_>>(), &cols)?,
                    wz_inv.clone(),
                )
            }
            // s = Wz y + d with d = -Wz r
            BlockLayout::Four => {
                let cols: Vec<usize> = ch.d.clone().chain(ch.flex_cols()).collect();
                (
                    cl.full.select(&ch.s.clone().collect::<Vec<_>>(), &cols)?,
                    -&wz_inv,
                )
            }
        };
        let in_gain = crate::linalg::block_diag(&[&(-&wz), &i_fl]);
        m.scale_io(&out_gain, &in_gain)
    }

    /// Closes `K_RB`, the observer and `K_FM` around every frozen model.
    pub fn grid_stability_check(
        &self,
        params: &StructuredControllerParams,
    ) -> Result<GridCertificate> {
        let abscissa = self
            .locals
            .par_iter()
            .map(|g| self.feedback_loop(params, g)?.full.spectral_abscissa())
            .collect::<Result<Vec<f64>>>()?;
        Ok(GridCertificate {
            points: self.plant.grid.clone(),
            hurwitz: abscissa.iter().map(|a| *a < 0.0).collect(),
            abscissa,
        })
    }

    fn worst_abscissa(&self, params: &StructuredControllerParams) -> Result<f64> {
        let mut worst = f64::NEG_INFINITY;
        for g in &self.locals {
            worst = worst.max(self.feedback_loop(params, g)?.full.spectral_abscissa()?);
        }
        Ok(worst)
    }

    /// Objective value: `||M(:, cols)||_inf` when every frozen loop decays
    /// faster than the margin, `+inf` otherwise. Second value is the worst
    /// grid abscissa.
    pub fn objective(
        &self,
        params: &StructuredControllerParams,
        cols: &[usize],
        opts: &HinfOptions,
    ) -> (f64, f64) {
        let absc = match self.worst_abscissa(params) {
            Ok(a) if a.is_finite() => a,
            _ => return (f64::INFINITY, f64::INFINITY),
        };
        if absc >= -self.stability_margin {
            return (f64::INFINITY, absc);
        }
        let gamma = self
            .closed_loop(params)
            .and_then(|cl| cl.norm(cols, opts))
            .unwrap_or(f64::INFINITY);
        (gamma, absc)
    }

    /// Stabilization measure used before any feasible point exists.
    pub fn abscissa_objective(&self, params: &StructuredControllerParams) -> f64 {
        self.worst_abscissa(params).unwrap_or(f64::INFINITY)
    }

    /// Columns optimized by the conventional design (flexible loop open).
    pub fn conventional_cols(&self) -> Vec<usize> {
        let ch = self.channel_map();
        ch.rb_cols()
    }

    pub fn all_cols(&self) -> Vec<usize> {
        self.channel_map().w()
    }

    pub fn channel_map(&self) -> ChannelMap {
        let n_rb = self.n_rb();
        let n_fl = self.n_flex();
        match self.layout {
            BlockLayout::Six => ChannelMap {
                z1: 0..n_rb,
                z2: n_rb..2 * n_rb,
                w1: 0..n_rb,
                w2: n_rb..2 * n_rb,
                w3: Some(2 * n_rb..2 * n_rb + n_fl),
                d: 2 * n_rb + n_fl..3 * n_rb + n_fl,
                s: 2 * n_rb..3 * n_rb,
            },
            BlockLayout::Four => ChannelMap {
                z1: 0..n_rb,
                z2: n_rb..2 * n_rb,
                w1: 0..n_rb,
                w2: n_rb..n_rb + n_fl,
                w3: None,
                d: n_rb + n_fl..2 * n_rb + n_fl,
                s: 2 * n_rb..3 * n_rb,
            },
        }
    }
}
