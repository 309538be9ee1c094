//! Command-line front end: argument parsing, orchestration and file output.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::Value;

use crate::analysis::{self, DesignMetrics, TimeDomainComparison};
use crate::config::RunConfig;
use crate::decoupling::{
    apply_decoupling, check_decoupling, extended_input_decoupling, DecouplingCheck,
};
use crate::error::{Error, Result};
use crate::mechanics::{group_and_partition, modal_decompose};
use crate::shaping::BlockLayout;
use crate::statespace::{freq_response, FrequencyResponse, HinfOptions};
use crate::synthesis::{
    build_uncertain_plant, synthesize_logged, ChannelMap, FreeSet, GridCertificate, IterateRecord,
    ParamsDoc, PlantSummary, StructuredControllerParams, SynthesisProblem, SynthesisResult,
};

#[derive(Debug, Parser)]
#[command(
    name = "modal-codesign",
    version,
    about = "Rigid-body, observer and flexible-mode damping co-design"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Benchmark name (two_mass, mmpa_lite) or model JSON file.
    #[arg(long)]
    pub model: Option<String>,
    /// Run configuration JSON.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Design point, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub p_star: Option<Vec<f64>>,
    /// Grid points per scheduling axis.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Objective evaluations per synthesis stage.
    #[arg(long)]
    pub budget: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LayoutArg {
    Six,
    Four,
}

impl From<LayoutArg> for BlockLayout {
    fn from(l: LayoutArg) -> Self {
        match l {
            LayoutArg::Six => BlockLayout::Six,
            LayoutArg::Four => BlockLayout::Four,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct DesignArgs {
    /// Controller parameters, or a results file written by synth6/synth4.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Interconnection used when the parameters do not name one.
    #[arg(long, value_enum, default_value = "six")]
    pub layout: LayoutArg,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Modal decoupling at the design point.
    Decouple {
        #[command(flatten)]
        common: Common,
        /// Flexible modes included in the input decoupling.
        #[arg(long)]
        n_flex: Option<usize>,
    },
    /// Output-based observer co-design (6-block), with the conventional design for comparison.
    Synth6 {
        #[command(flatten)]
        common: Common,
    },
    /// Error-based observer co-design (4-block), with the conventional design for comparison.
    Synth4 {
        #[command(flatten)]
        common: Common,
    },
    /// Metrics, closed-loop magnitudes and the uncertainty weight of one design.
    Analyze {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        design: DesignArgs,
    },
    /// Time-domain tracking under a flexible-band disturbance, observer on vs off.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        design: DesignArgs,
    },
    /// Frozen-grid closed-loop stability of one design.
    Gridcheck {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        design: DesignArgs,
    },
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_NUMERIC: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_usage() {
                EXIT_USAGE
            } else {
                EXIT_NUMERIC
            }
        }
    }
}

pub fn execute(cmd: &Command) -> Result<i32> {
    match cmd {
        Command::Decouple { common, n_flex } => cmd_decouple(common, *n_flex),
        Command::Synth6 { common } => cmd_synth(common, BlockLayout::Six).map(|_| EXIT_OK),
        Command::Synth4 { common } => cmd_synth(common, BlockLayout::Four).map(|_| EXIT_OK),
        Command::Analyze { common, design } => cmd_analyze(common, design),
        Command::Simulate { common, design } => cmd_simulate(common, design),
        Command::Gridcheck { common, design } => cmd_gridcheck(common, design),
    }
}

/// Configuration from `--config` (or `--model`) with the flag overrides applied.
pub fn load_config(common: &Common) -> Result<RunConfig> {
    load_config_or(common, None)
}

/// As [`load_config`]; without `--model` and `--config` the configuration
/// stored in a synthesis results file given by `--params` is used.
pub fn load_design_config(common: &Common, design: &DesignArgs) -> Result<RunConfig> {
    let stored = match (&common.config, &common.model, &design.params) {
        (None, None, Some(p)) => stored_config(p)?,
        _ => None,
    };
    load_config_or(common, stored)
}

fn stored_config(path: &Path) -> Result<Option<RunConfig>> {
    let text = fs::read_to_string(path).map_err(|e| Error::Config {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let v: Value = serde_json::from_str(&text)?;
    match v.get("config") {
        Some(c) => RunConfig::from_json(&c.to_string()).map(Some),
        None => Ok(None),
    }
}

fn load_config_or(common: &Common, stored: Option<RunConfig>) -> Result<RunConfig> {
    let mut cfg = match (&common.config, &common.model, stored) {
        (Some(path), _, _) => RunConfig::from_file(path)?,
        (None, Some(m), _) => RunConfig::for_model(m.clone()),
        (None, None, Some(c)) => c,
        (None, None, None) => {
            return Err(Error::Config {
                path: "model".into(),
                message: "pass --model or --config".into(),
            });
        }
    };
    if let (Some(_), Some(m)) = (&common.config, &common.model) {
        cfg.model = m.clone();
    }
    if let Some(p) = &common.p_star {
        cfg.p_star = Some(p.clone());
    }
    if let Some(n) = common.grid {
        cfg.grid = Some(crate::config::GridSpec::PerAxis(n));
    }
    if let Some(b) = common.budget {
        cfg.set_budget(b);
    }
    if let Some(s) = common.seed {
        cfg.set_seed(s);
    }
    Ok(cfg)
}

fn out_dir(common: &Common) -> Result<&Path> {
    fs::create_dir_all(&common.out)?;
    Ok(&common.out)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct DecoupleSummary {
    model: String,
    n_rb: usize,
    n_flex: usize,
    p_star: Vec<f64>,
    position_independent: bool,
    note: &'static str,
    check: DecouplingCheck,
}

fn cmd_decouple(common: &Common, n_flex: Option<usize>) -> Result<i32> {
    let cfg = load_config(common)?;
    let spec = cfg.resolve()?.spec;
    let n_flex = n_flex.unwrap_or(spec.n_flex);
    let model = &spec.model;
    let dec = modal_decompose(model)?;
    let n_rb = cfg.n_rb.unwrap_or(spec.n_rb);
    if model.nu() < n_rb + n_flex {
        return Err(Error::InsufficientActuators {
            n_inputs: model.nu(),
            n_rb,
            n_flex,
        });
    }
    let retain: Vec<usize> = (n_rb..dec.n_modes()).take(n_flex).collect();
    if retain.len() < n_flex {
        return Err(Error::ModeSelection(format!(
            "{n_flex} flexible modes requested, the model has {}",
            retain.len()
        )));
    }
    let pm = group_and_partition(&dec, model, n_rb, &retain)?;
    let p_star = spec.p_star.clone();
    let pair = extended_input_decoupling(&pm, &p_star, n_flex)?;
    let check = check_decoupling(&pm, &p_star, &pair)?;
    let decoupled = apply_decoupling(&pm.evaluate_local(&p_star)?, &pair)?;
    let resp = freq_response(&decoupled, &cfg.frequency.freqs()?)?;

    let dir = out_dir(common)?;
    fs::write(dir.join("decoupling.json"), pair.to_json() + "\n")?;
    resp.write_csv(fs::File::create(dir.join("decoupled_frf.csv"))?)?;
    let position_independent = pm.is_position_independent();
    let note = if position_independent {
        "position-independent decoupling"
    } else {
        "decoupling exact at p_star only"
    };
    let summary = DecoupleSummary {
        model: model.name.clone(),
        n_rb,
        n_flex,
        p_star,
        position_independent,
        note,
        check,
    };
    write_json(&dir.join("decouple_summary.json"), &summary)?;
    println!("{note}");
    println!(
        "input residual {:.3e}, output residual {:.3e}, flexible leakage {:.3e}",
        check.input_residual, check.output_residual, check.flex_leakage
    );
    Ok(EXIT_OK)
}

pub fn build_problem(cfg: &RunConfig, layout: BlockLayout) -> Result<SynthesisProblem> {
    let r = cfg.resolve()?;
    let plant = r.plant()?;
    match layout {
        BlockLayout::Six => SynthesisProblem::six_block(plant, &r.shaping, &r.expected_error),
        BlockLayout::Four => SynthesisProblem::four_block(plant, &r.shaping, &r.expected_error),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DesignReport {
    pub result: SynthesisResult,
    pub metrics: DesignMetrics,
}

#[derive(Debug, Clone, Serialize)]
pub struct Comparison {
    /// Flexible-channel peak of the conventional over the proposed design, in dB.
    pub flex_peak_reduction_db: f64,
    /// Proposed over conventional rigid-body crossover.
    pub crossover_ratio: Option<f64>,
    pub sensitivity_peak_change_db: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SynthReport {
    pub layout: BlockLayout,
    pub plant: PlantSummary,
    pub channels: ChannelMap,
    pub config: RunConfig,
    pub conventional: DesignReport,
    pub proposed: DesignReport,
    pub comparison: Comparison,
    pub observer_state_dim: usize,
}

#[derive(Debug, Serialize)]
struct FailureReport<'a> {
    status: &'static str,
    stage: &'static str,
    error: String,
    log: &'a [IterateRecord],
}

/// Conventional design (`K_RB` only, `xi = 0`, rigid-body columns) followed by
/// the co-design of all parameters on all columns from the conventional result.
/// On failure the partial iterate log is written to `dir` when given.
pub fn run_synthesis(
    cfg: &RunConfig,
    layout: BlockLayout,
    dir: Option<&Path>,
) -> Result<(SynthesisProblem, SynthReport)> {
    let problem = build_problem(cfg, layout)?;
    let init = problem.initial_params(cfg.observer.care_q, cfg.observer.care_v)?;
    let stage = |name: &'static str,
                 init: &StructuredControllerParams,
                 free: FreeSet,
                 cols: &[usize],
                 opts| {
        let mut log = Vec::new();
        match synthesize_logged(&problem, init, free, cols, &opts, &mut log) {
            Ok(mut r) => {
                r.log = log;
                log::info!(
                    "{name}: gamma {:.4} -> {:.4} in {} evaluations",
                    r.gamma_init,
                    r.gamma,
                    r.evaluations
                );
                Ok(r)
            }
            Err(e) => {
                if let Some(d) = dir {
                    let rep = FailureReport {
                        status: "failed",
                        stage: name,
                        error: e.to_string(),
                        log: &log,
                    };
                    write_json(&d.join("results.json"), &rep)?;
                }
                Err(e)
            }
        }
    };
    let conv = stage(
        "conventional",
        &init,
        FreeSet::KRB_ONLY,
        &problem.conventional_cols(),
        cfg.conventional_options(),
    )?;
    let prop = stage(
        "proposed",
        &conv.best,
        FreeSet::ALL,
        &problem.all_cols(),
        cfg.proposed_options(),
    )?;
    let mc = analysis::design_metrics(&problem, &conv.best)?;
    let mp = analysis::design_metrics(&problem, &prop.best)?;
    let comparison = Comparison {
        flex_peak_reduction_db: analysis::to_db(mc.flex_peak / mp.flex_peak),
        crossover_ratio: match (mp.crossover_hz, mc.crossover_hz) {
            (Some(a), Some(b)) => Some(a / b),
            _ => None,
        },
        sensitivity_peak_change_db: analysis::to_db(mp.sensitivity_peak / mc.sensitivity_peak),
    };
    let observer_state_dim = problem.observer(&prop.best)?.state_dim();
    let report = SynthReport {
        layout,
        plant: problem.plant.summary(),
        channels: problem.channel_map(),
        config: cfg.clone(),
        conventional: DesignReport {
            result: conv,
            metrics: mc,
        },
        proposed: DesignReport {
            result: prop,
            metrics: mp,
        },
        comparison,
        observer_state_dim,
    };
    Ok((problem, report))
}

fn cmd_synth(common: &Common, layout: BlockLayout) -> Result<SynthReport> {
    let cfg = load_config(common)?;
    let dir = out_dir(common)?;
    let (problem, report) = run_synthesis(&cfg, layout, Some(dir))?;
    let freqs = cfg.frequency.freqs()?;
    write_channel_csv(
        &dir.join("conventional_channels.csv"),
        &problem,
        &report.conventional.result.best,
        &freqs,
    )?;
    write_channel_csv(
        &dir.join("proposed_channels.csv"),
        &problem,
        &report.proposed.result.best,
        &freqs,
    )?;
    fs::write(
        dir.join("proposed_observer.json"),
        problem.observer(&report.proposed.result.best)?.to_json() + "\n",
    )?;
    write_json(&dir.join("results.json"), &report)?;
    println!(
        "gamma conventional {:.4}, proposed {:.4} (init {:.4}); flexible peak reduced {:.2} dB",
        report.conventional.result.gamma,
        report.proposed.result.gamma,
        report.proposed.result.gamma_init,
        report.comparison.flex_peak_reduction_db
    );
    Ok(report)
}

/// Column names `z1[0]/w1[0]` etc. for the weighted closed loop plus its sensitivity port.
pub fn channel_labels(map: &ChannelMap) -> (Vec<String>, Vec<String>) {
    let name = |prefix: &str, r: &std::ops::Range<usize>| -> Vec<String> {
        (0..r.len()).map(|k| format!("{prefix}[{k}]")).collect()
    };
    let mut rows = name("z1", &map.z1);
    rows.extend(name("z2", &map.z2));
    rows.extend(name("s", &map.s));
    let mut cols = name("w1", &map.w1);
    cols.extend(name("w2", &map.w2));
    if let Some(w3) = &map.w3 {
        cols.extend(name("w3", w3));
    }
    cols.extend(name("d", &map.d));
    (rows, cols)
}

/// Magnitude of every closed-loop channel on `freqs` (Hz).
pub fn write_channel_csv(
    path: &Path,
    problem: &SynthesisProblem,
    params: &StructuredControllerParams,
    freqs: &[f64],
) -> Result<()> {
    let cl = problem.closed_loop(params)?;
    let resp = freq_response(&cl.full, freqs)?;
    let (rows, cols) = channel_labels(&cl.channels);
    write_magnitudes(path, &resp, &rows, &cols)
}

fn write_magnitudes(
    path: &Path,
    resp: &FrequencyResponse,
    rows: &[String],
    cols: &[String],
) -> Result<()> {
    let mut wr = csv::Writer::from_path(path)?;
    let mut header = vec!["freq_hz".to_string()];
    for r in rows {
        for c in cols {
            header.push(format!("|{r}/{c}|"));
        }
    }
    wr.write_record(&header)?;
    for (f, m) in resp.freqs.iter().zip(&resp.values) {
        let mut rec = vec![format!("{f:.9e}")];
        for i in 0..rows.len() {
            for j in 0..cols.len() {
                rec.push(format!("{:.9e}", m[(i, j)].norm()));
            }
        }
        wr.write_record(&rec)?;
    }
    wr.flush()?;
    Ok(())
}

/// Designs read from `--params`: the proposed one and, for results files, the conventional one.
#[derive(Debug, Clone)]
pub struct LoadedDesign {
    pub layout: BlockLayout,
    pub on: StructuredControllerParams,
    pub off: Option<StructuredControllerParams>,
}

pub fn load_design(path: &Path, fallback: BlockLayout) -> Result<LoadedDesign> {
    let text = fs::read_to_string(path).map_err(|e| Error::Config {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let v: Value = serde_json::from_str(&text)?;
    let params_at = |ptr: &str| -> Result<Option<StructuredControllerParams>> {
        match v.pointer(ptr) {
            Some(p) => {
                let doc: ParamsDoc =
                    serde_path_to_error::deserialize(p.clone()).map_err(|e| Error::Config {
                        path: format!("{ptr}/{}", e.path()),
                        message: e.into_inner().to_string(),
                    })?;
                Ok(Some(StructuredControllerParams::from_doc(&doc)?))
            }
            None => Ok(None),
        }
    };
    if v.get("K_RB").is_some() {
        let on = params_at("")?.expect("present");
        return Ok(LoadedDesign {
            layout: fallback,
            on,
            off: None,
        });
    }
    let layout = match v.get("layout").and_then(Value::as_str) {
        Some("six") => BlockLayout::Six,
        Some("four") => BlockLayout::Four,
        _ => fallback,
    };
    let on = params_at("/proposed/result/params")?.ok_or_else(|| Error::Config {
        path: path.display().to_string(),
        message: "neither controller parameters nor a synthesis results file".into(),
    })?;
    let off = params_at("/conventional/result/params")?;
    Ok(LoadedDesign { layout, on, off })
}

fn design_for(design: &DesignArgs, cfg: &RunConfig) -> Result<(SynthesisProblem, LoadedDesign)> {
    match &design.params {
        Some(p) => {
            let d = load_design(p, design.layout.into())?;
            let problem = build_problem(cfg, d.layout)?;
            problem.check_params(&d.on)?;
            Ok((problem, d))
        }
        None => {
            let problem = build_problem(cfg, design.layout.into())?;
            let on = problem.initial_params(cfg.observer.care_q, cfg.observer.care_v)?;
            Ok((
                problem,
                LoadedDesign {
                    layout: design.layout.into(),
                    on,
                    off: None,
                },
            ))
        }
    }
}

#[derive(Debug, Serialize)]
struct AnalyzeReport {
    layout: BlockLayout,
    plant: PlantSummary,
    metrics: DesignMetrics,
    observer_state_dim: usize,
    uncertainty_weight_dominates: bool,
}

fn cmd_analyze(common: &Common, design: &DesignArgs) -> Result<i32> {
    let cfg = load_design_config(common, design)?;
    let (problem, d) = design_for(design, &cfg)?;
    let dir = out_dir(common)?;
    let freqs = cfg.frequency.freqs()?;
    let metrics = analysis::design_metrics(&problem, &d.on)?;
    write_channel_csv(&dir.join("channels.csv"), &problem, &d.on, &freqs)?;

    let loop_gain = problem.rb_loop_gain(&d.on, &problem.plant.nominal)?;
    let resp = freq_response(&loop_gain, &freqs)?;
    let names: Vec<String> = (0..problem.n_rb()).map(|k| format!("L[{k}]")).collect();
    let mut wr = csv::Writer::from_path(dir.join("loop_gain.csv"))?;
    let mut header = vec!["freq_hz".to_string()];
    header.extend(names.iter().map(|n| format!("|{n}|")));
    wr.write_record(&header)?;
    for (f, m) in resp.freqs.iter().zip(&resp.values) {
        let mut rec = vec![format!("{f:.9e}")];
        rec.extend((0..names.len()).map(|k| format!("{:.9e}", m[(k, k)].norm())));
        wr.write_record(&rec)?;
    }
    wr.flush()?;

    let flex_in: Vec<usize> = (problem.n_rb()..problem.n_rb() + problem.n_flex()).collect();
    let up = build_uncertain_plant(problem.locals().to_vec(), nominal_index(&problem), &flex_in)?;
    let mut wr = csv::Writer::from_path(dir.join("uncertainty.csv"))?;
    wr.write_record(["freq_hz", "deviation", "weight"])?;
    let mut dominates = true;
    for &f in &freqs {
        let w = 2.0 * std::f64::consts::PI * f;
        let (dev, wt) = (up.deviation(w)?, up.weight_mag(w));
        dominates &= wt >= dev * (1.0 - 1e-9);
        wr.write_record(&[
            format!("{f:.9e}"),
            format!("{dev:.9e}"),
            format!("{wt:.9e}"),
        ])?;
    }
    wr.flush()?;

    let report = AnalyzeReport {
        layout: d.layout,
        plant: problem.plant.summary(),
        observer_state_dim: problem.observer(&d.on)?.state_dim(),
        metrics,
        uncertainty_weight_dominates: dominates,
    };
    write_json(&dir.join("analysis.json"), &report)?;
    println!(
        "gamma {:.4}, flexible peak {:.4}, sensitivity peak {:.4}",
        report.metrics.gamma, report.metrics.flex_peak, report.metrics.sensitivity_peak
    );
    Ok(EXIT_OK)
}

fn nominal_index(problem: &SynthesisProblem) -> usize {
    let p = &problem.plant.p_star;
    problem
        .plant
        .grid
        .iter()
        .enumerate()
        .map(|(k, q)| {
            (
                k,
                q.iter().zip(p).map(|(a, b)| (a - b).powi(2)).sum::<f64>(),
            )
        })
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map_or(0, |(k, _)| k)
}

#[derive(Debug, Serialize)]
struct SimulateReport {
    layout: BlockLayout,
    sample_time: f64,
    frozen: TimeDomainComparison,
    scheduled_bounded: bool,
    scheduled_max_abs_error: f64,
    grid_certificate_passed: bool,
}

fn cmd_simulate(common: &Common, design: &DesignArgs) -> Result<i32> {
    let cfg = load_design_config(common, design)?;
    let dir = out_dir(common)?;
    let (problem, d) = match &design.params {
        Some(_) => design_for(design, &cfg)?,
        None => {
            let (problem, rep) = run_synthesis(&cfg, design.layout.into(), Some(dir))?;
            let d = LoadedDesign {
                layout: rep.layout,
                on: rep.proposed.result.best.clone(),
                off: Some(rep.conventional.result.best.clone()),
            };
            (problem, d)
        }
    };
    let off = d.off.clone().unwrap_or_else(|| StructuredControllerParams {
        xi: vec![0.0; d.on.xi.len()],
        ..d.on.clone()
    });
    let opts = cfg.time_domain_options();
    let cmp = analysis::compare_time_domain(&problem, &d.on, &off, &opts)?;
    let sched = analysis::scheduled_simulation(&problem, &d.on, &opts, cfg.levels)?;
    let cert = problem.grid_stability_check(&d.on)?;

    let mut wr = csv::Writer::from_path(dir.join("trajectory.csv"))?;
    let n_rb = problem.n_rb();
    let mut header = vec!["t_s".to_string(), "reference".into(), "disturbance".into()];
    header.extend((0..n_rb).map(|k| format!("error_on[{k}]")));
    header.extend((0..n_rb).map(|k| format!("error_off[{k}]")));
    wr.write_record(&header)?;
    for k in 0..cmp.on.t.len() {
        let mut rec = vec![
            format!("{:.9e}", cmp.on.t[k]),
            format!("{:.9e}", cmp.on.reference[k]),
            format!("{:.9e}", cmp.on.disturbance[k]),
        ];
        rec.extend(cmp.on.error[k].iter().map(|v| format!("{v:.9e}")));
        rec.extend(cmp.off.error[k].iter().map(|v| format!("{v:.9e}")));
        wr.write_record(&rec)?;
    }
    wr.flush()?;

    let mut wr = csv::Writer::from_path(dir.join("scheduled.csv"))?;
    let mut header = vec!["t_s".to_string()];
    header.extend((0..problem.plant.p_star.len()).map(|k| format!("p[{k}]")));
    header.extend((0..n_rb).map(|k| format!("error[{k}]")));
    wr.write_record(&header)?;
    for k in 0..sched.t.len() {
        let mut rec = vec![format!("{:.9e}", sched.t[k])];
        rec.extend(sched.p[k].iter().map(|v| format!("{v:.9e}")));
        rec.extend(sched.error[k].iter().map(|v| format!("{v:.9e}")));
        wr.write_record(&rec)?;
    }
    wr.flush()?;

    let report = SimulateReport {
        layout: d.layout,
        sample_time: opts.sample_time(&problem),
        scheduled_bounded: sched.bounded,
        scheduled_max_abs_error: sched.max_abs_error,
        grid_certificate_passed: cert.all_stable(),
        frozen: cmp,
    };
    write_json(&dir.join("simulation.json"), &report)?;
    println!(
        "RMS tracking error observer on {:.4e}, off {:.4e}, ratio {:.3}; scheduled sweep bounded: {}",
        report.frozen.rms_on, report.frozen.rms_off, report.frozen.ratio, report.scheduled_bounded
    );
    Ok(if report.scheduled_bounded {
        EXIT_OK
    } else {
        EXIT_NUMERIC
    })
}

#[derive(Debug, Serialize)]
struct GridReport {
    layout: BlockLayout,
    all_stable: bool,
    worst_abscissa: f64,
    certificate: GridCertificate,
    gamma: f64,
}

fn cmd_gridcheck(common: &Common, design: &DesignArgs) -> Result<i32> {
    let cfg = load_design_config(common, design)?;
    let (problem, d) = design_for(design, &cfg)?;
    let cert = problem.grid_stability_check(&d.on)?;
    let (gamma, _) = problem.objective(&d.on, &problem.all_cols(), &HinfOptions::default());
    let dir = out_dir(common)?;
    let mut wr = csv::Writer::from_path(dir.join("gridcheck.csv"))?;
    let mut header: Vec<String> = (0..problem.plant.p_star.len())
        .map(|k| format!("p[{k}]"))
        .collect();
    header.extend(["abscissa_rad_s".to_string(), "hurwitz".to_string()]);
    wr.write_record(&header)?;
    for ((p, a), h) in cert.points.iter().zip(&cert.abscissa).zip(&cert.hurwitz) {
        let mut rec: Vec<String> = p.iter().map(|v| format!("{v:.9e}")).collect();
        rec.push(format!("{a:.9e}"));
        rec.push(h.to_string());
        wr.write_record(&rec)?;
    }
    wr.flush()?;
    let report = GridReport {
        layout: d.layout,
        all_stable: cert.all_stable(),
        worst_abscissa: cert.worst_abscissa(),
        gamma,
        certificate: cert,
    };
    write_json(&dir.join("gridcheck.json"), &report)?;
    println!(
        "{} of {} grid points Hurwitz, worst abscissa {:.4e}",
        report.certificate.hurwitz.iter().filter(|h| **h).count(),
        report.certificate.points.len(),
        report.worst_abscissa
    );
    Ok(if report.all_stable {
        EXIT_OK
    } else {
        EXIT_NUMERIC
    })
}
