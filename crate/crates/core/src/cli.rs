//! `mmblock` command-line front end.
//!
//! Exit codes: 0 success, 1 numerical failure, 2 configuration error,
//! 3 `validate` found a statistic beyond its threshold.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use crate::applications::{
    average_path_loss_at, cell_average_rate, cell_edge_mean_rate, max_cell_radius,
    optimal_ap_height, CellConfig,
};
use crate::conditional::conditional_curve;
use crate::config::{OutputFormat, RunConfig};
use crate::error::BlockageError;
use crate::renewal::RenewalModel;
use crate::simulator::{
    run_complexity_benchmark, simulate, summarize, ConditionalEstimate, SimulationMode,
};
use crate::table::{ks_distance, DistributionTable};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NUMERIC: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;

/// Relative snap used when matching simulated durations to table atoms.
const KS_SNAP: f64 = 1e-9;

#[derive(Debug, Parser)]
#[command(
    name = "mmblock",
    version,
    about = "Temporal statistics of human-body blockage on mmWave links"
)]
pub struct Cli {
    /// TOML run configuration; baseline values when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file (standard output by default).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// `csv` or `json`.
    #[arg(long, global = true)]
    pub format: Option<OutputFormat>,
    /// Simulator seed; reported in every simulation row.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Simulated time, seconds.
    #[arg(long, global = true)]
    pub duration: Option<f64>,
    /// Simulated blockage region: `rectangle` (as modelled) or `exact`.
    #[arg(long, global = true)]
    pub mode: Option<SimulationMode>,
    /// Truncation threshold of the conditional-probability series.
    #[arg(long, global = true)]
    pub epsilon: Option<f64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Dist {
    /// Residence time T.
    T,
    /// Blocked interval η.
    Eta,
    /// Non-blocked interval ω.
    Omega,
    /// Residual blocked time.
    ResidualEta,
    /// Residual non-blocked time.
    ResidualOmega,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Interval means and state fractions.
    Metrics,
    /// One tabulated distribution as `x,cdf` rows.
    Cdf {
        #[arg(long, value_enum, default_value = "eta")]
        dist: Dist,
    },
    /// Conditional state probabilities on the configured lag grid.
    Conditional,
    /// Run the blocker simulator and summarize the trace.
    Simulate,
    /// Compare the analytical model with the simulator.
    Validate,
    /// AP height minimising the cell-edge path loss.
    OptimizeHeight {
        /// Emit the full objective curve instead of the minimisers.
        #[arg(long)]
        curve: bool,
    },
    /// Largest cell radius meeting each edge-rate target.
    CellRange {
        /// Edge-rate target, b/s; repeatable. Overrides `cell.target_rates`.
        #[arg(long)]
        target: Vec<f64>,
    },
    /// Time direct versus model-based link-state tracking.
    Bench,
    /// Print the resolved configuration as TOML.
    Config,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Model(#[from] BlockageError),
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Model(e) => match e {
                BlockageError::Config { .. }
                | BlockageError::InvalidParameter { .. }
                | BlockageError::DegenerateGeometry(_)
                | BlockageError::Domain(_)
                | BlockageError::NeverBlocked => EXIT_CONFIG,
                BlockageError::GridMismatch(_)
                | BlockageError::InvalidTable(_)
                | BlockageError::NumericalFailure { .. }
                | BlockageError::Infeasible { .. } => EXIT_NUMERIC,
            },
            CliError::Io(_) | CliError::Csv(_) | CliError::Json(_) => EXIT_NUMERIC,
        }
    }
}

fn io_broken_pipe(e: &io::Error) -> bool {
    e.kind() == io::ErrorKind::BrokenPipe
        || e.get_ref()
            .and_then(|inner| inner.downcast_ref::<csv::Error>())
            .is_some_and(csv_broken_pipe)
}

fn csv_broken_pipe(e: &csv::Error) -> bool {
    matches!(e.kind(), csv::ErrorKind::Io(io) if io_broken_pipe(io))
}

impl CliError {
    fn is_broken_pipe(&self) -> bool {
        match self {
            CliError::Io(e) => io_broken_pipe(e),
            CliError::Csv(e) => csv_broken_pipe(e),
            CliError::Json(e) => e.io_error_kind() == Some(io::ErrorKind::BrokenPipe),
            CliError::Model(_) => false,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        // A closed downstream pipe (`| head`) is not a failure.
        Err(e) if e.is_broken_pipe() => EXIT_OK,
        Err(e) => {
            eprintln!("mmblock: {e}");
            e.exit_code()
        }
    }
}

/// Loads the configuration and applies command-line overrides.
pub fn resolve_config(cli: &Cli) -> CliResult<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::from_path(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.simulation.seed = seed;
        cfg.bench.seed = seed;
    }
    if let Some(d) = cli.duration {
        if matches!(cli.command, Command::Bench) {
            cfg.bench.duration = d;
        } else {
            cfg.simulation.duration = d;
        }
    }
    if let Some(mode) = cli.mode {
        cfg.simulation.mode = mode;
    }
    if let Some(eps) = cli.epsilon {
        cfg.numeric.epsilon = eps;
    }
    if let Some(fmt) = cli.format {
        cfg.output.format = fmt;
    }
    if let Some(out) = &cli.out {
        cfg.output.path = Some(out.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn execute(cli: &Cli) -> CliResult<i32> {
    let cfg = resolve_config(cli)?;
    let mut out: Box<dyn Write> = match &cfg.output.path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    let code = match &cli.command {
        Command::Metrics => metrics(&cfg, &mut out)?,
        Command::Cdf { dist } => cdf(&cfg, *dist, &mut out)?,
        Command::Conditional => conditional(&cfg, &mut out)?,
        Command::Simulate => simulate_cmd(&cfg, &mut out)?,
        Command::Validate => validate(&cfg, &mut out)?,
        Command::OptimizeHeight { curve } => optimize_height(&cfg, *curve, &mut out)?,
        Command::CellRange { target } => cell_range(&cfg, target, &mut out)?,
        Command::Bench => bench(&cfg, &mut out)?,
        Command::Config => {
            out.write_all(cfg.to_toml_string().as_bytes())?;
            EXIT_OK
        }
    };
    out.flush()?;
    Ok(code)
}

/// Writes `rows` as CSV with a header, or as a JSON array.
fn emit_rows<T: Serialize>(cfg: &RunConfig, rows: &[T], out: &mut dyn Write) -> CliResult<()> {
    match cfg.output.format {
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for r in rows {
                w.serialize(r)?;
            }
            w.flush()?;
        }
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut *out, rows)?;
            writeln!(out)?;
        }
    }
    Ok(())
}

fn emit_json<T: Serialize>(value: &T, out: &mut dyn Write) -> CliResult<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}

fn build_model(cfg: &RunConfig) -> CliResult<RenewalModel> {
    Ok(RenewalModel::build(
        &cfg.scenario_config(),
        &cfg.numeric.model_options(),
    )?)
}

#[derive(Debug, Serialize)]
struct MetricsRow {
    scenario: String,
    #[serde(rename = "lambda_I")]
    lambda_i: f64,
    lambda: f64,
    #[serde(rename = "E_T")]
    e_t: f64,
    #[serde(rename = "E_eta")]
    e_eta: f64,
    #[serde(rename = "E_eta_numeric")]
    e_eta_numeric: f64,
    #[serde(rename = "E_omega")]
    e_omega: f64,
    #[serde(rename = "E_xi")]
    e_xi: f64,
    frac_los: f64,
    frac_nlos: f64,
    iterations: usize,
}

fn metrics(cfg: &RunConfig, out: &mut dyn Write) -> CliResult<i32> {
    let sc = cfg.scenario_config();
    let row = match RenewalModel::build(&sc, &cfg.numeric.model_options()) {
        Ok(m) => MetricsRow {
            scenario: sc.kind.to_string(),
            lambda_i: sc.lambda_i,
            lambda: m.lambda,
            e_t: m.e_t,
            e_eta: m.e_eta,
            e_eta_numeric: m.e_eta_numeric,
            e_omega: m.e_omega,
            e_xi: m.cycle_mean(),
            frac_los: m.frac_los,
            frac_nlos: m.frac_nlos,
            iterations: m.iterations,
        },
        Err(BlockageError::NeverBlocked) => {
            let res = crate::residence::residence(&sc, cfg.numeric.grid_intervals)?;
            MetricsRow {
                scenario: sc.kind.to_string(),
                lambda_i: sc.lambda_i,
                lambda: 0.0,
                e_t: res.time.mean(),
                e_eta: 0.0,
                e_eta_numeric: 0.0,
                e_omega: f64::INFINITY,
                e_xi: f64::INFINITY,
                frac_los: 1.0,
                frac_nlos: 0.0,
                iterations: 0,
            }
        }
        Err(e) => return Err(e.into()),
    };
    emit_rows(cfg, &[row], out)?;
    Ok(EXIT_OK)
}

fn cdf(cfg: &RunConfig, dist: Dist, out: &mut dyn Write) -> CliResult<i32> {
    let model = build_model(cfg)?;
    let table = match dist {
        Dist::T => model.f_t.clone(),
        Dist::Eta => model.f_eta.clone(),
        Dist::Omega => model.nonblocked()?,
        Dist::ResidualEta => model.residual_blocked()?,
        Dist::ResidualOmega => model.residual_nonblocked()?,
    };
    match cfg.output.format {
        OutputFormat::Csv => table.write_csv(&mut *out)?,
        OutputFormat::Json => {
            #[derive(Serialize)]
            struct CdfJson<'a> {
                dist: String,
                table: &'a DistributionTable,
            }
            let name = format!("{dist:?}").to_lowercase();
            emit_json(
                &CdfJson {
                    dist: name,
                    table: &table,
                },
                out,
            )?;
        }
    }
    Ok(EXIT_OK)
}

#[derive(Debug, Serialize)]
struct ConditionalRow {
    delta_t: f64,
    p00: f64,
    p01: f64,
    p10: f64,
    p11: f64,
    terms_used: usize,
}

fn conditional(cfg: &RunConfig, out: &mut dyn Write) -> CliResult<i32> {
    let model = build_model(cfg)?;
    let curve = conditional_curve(
        &model,
        &cfg.numeric.lags(),
        &cfg.numeric.conditional_options(),
    )?;
    let rows: Vec<ConditionalRow> = (0..curve.delta_t.len())
        .map(|i| ConditionalRow {
            delta_t: curve.delta_t[i],
            p00: curve.p00[i],
            p01: curve.p01[i],
            p10: curve.p10[i],
            p11: curve.p11[i],
            terms_used: curve.terms_used[i],
        })
        .collect();
    emit_rows(cfg, &rows, out)?;
    Ok(EXIT_OK)
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        f64::NAN
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

#[derive(Debug, Serialize)]
struct SimulateRow {
    seed: u64,
    mode: SimulationMode,
    duration: f64,
    frac_nlos: f64,
    n_busy_periods: usize,
    mean_blocked: f64,
    mean_nonblocked: f64,
    lag: Option<f64>,
    p00: Option<f64>,
    p01: Option<f64>,
    p10: Option<f64>,
    p11: Option<f64>,
    se_p00: Option<f64>,
    se_p11: Option<f64>,
}

#[derive(Debug, Serialize)]
struct SimulateJson {
    seed: u64,
    mode: SimulationMode,
    duration: f64,
    frac_nlos: f64,
    n_busy_periods: usize,
    mean_blocked: f64,
    mean_nonblocked: f64,
    conditional_estimates: Vec<ConditionalEstimate>,
}

fn simulate_cmd(cfg: &RunConfig, out: &mut dyn Write) -> CliResult<i32> {
    let s = &cfg.simulation;
    let trace = simulate(&cfg.scenario_config(), s.duration, s.seed, s.mode)?;
    let sum = summarize(&trace, &s.lags)?;
    let report = SimulateJson {
        seed: s.seed,
        mode: s.mode,
        duration: s.duration,
        frac_nlos: sum.frac_nlos,
        n_busy_periods: sum.n_busy_periods,
        mean_blocked: mean(&sum.blocked_durations),
        mean_nonblocked: mean(&sum.nonblocked_durations),
        conditional_estimates: sum.conditional_estimates,
    };
    if cfg.output.format == OutputFormat::Json {
        emit_json(&report, out)?;
        return Ok(EXIT_OK);
    }
    let base = SimulateRow {
        seed: report.seed,
        mode: report.mode,
        duration: report.duration,
        frac_nlos: report.frac_nlos,
        n_busy_periods: report.n_busy_periods,
        mean_blocked: report.mean_blocked,
        mean_nonblocked: report.mean_nonblocked,
        lag: None,
        p00: None,
        p01: None,
        p10: None,
        p11: None,
        se_p00: None,
        se_p11: None,
    };
    let rows: Vec<SimulateRow> = if report.conditional_estimates.is_empty() {
        vec![base]
    } else {
        report
            .conditional_estimates
            .iter()
            .map(|e| SimulateRow {
                lag: Some(e.lag),
                p00: Some(e.p00),
                p01: Some(e.p01),
                p10: Some(e.p10),
                p11: Some(e.p11),
                se_p00: Some(e.se_p00),
                se_p11: Some(e.se_p11),
                ..base
            })
            .collect()
    };
    emit_rows(cfg, &rows, out)?;
    Ok(EXIT_OK)
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationRow {
    pub metric: String,
    pub analytic: f64,
    pub simulated: f64,
    pub statistic: f64,
    pub threshold: f64,
    pub pass: bool,
    pub seed: u64,
}

fn validate(cfg: &RunConfig, out: &mut dyn Write) -> CliResult<i32> {
    let s = &cfg.simulation;
    let sc = cfg.scenario_config();
    let trace = simulate(&sc, s.duration, s.seed, s.mode)?;
    let sum = summarize(&trace, &[])?;
    let mut rows = Vec::new();
    match RenewalModel::build(&sc, &cfg.numeric.model_options()) {
        Ok(model) => {
            let rel = (sum.frac_nlos - model.frac_nlos).abs() / model.frac_nlos;
            rows.push(ValidationRow {
                metric: "frac_nlos".into(),
                analytic: model.frac_nlos,
                simulated: sum.frac_nlos,
                statistic: rel,
                threshold: s.frac_tolerance,
                pass: rel <= s.frac_tolerance,
                seed: s.seed,
            });
            let omega = model.nonblocked()?;
            for (metric, samples, table, analytic) in [
                (
                    "ks_blocked",
                    &sum.blocked_durations,
                    &model.f_eta,
                    model.e_eta,
                ),
                (
                    "ks_nonblocked",
                    &sum.nonblocked_durations,
                    &omega,
                    model.e_omega,
                ),
            ] {
                let d = ks_distance(samples, table, KS_SNAP);
                rows.push(ValidationRow {
                    metric: metric.into(),
                    analytic,
                    simulated: mean(samples),
                    statistic: d,
                    threshold: s.ks_threshold,
                    pass: d < s.ks_threshold,
                    seed: s.seed,
                });
            }
        }
        Err(BlockageError::NeverBlocked) => {
            rows.push(ValidationRow {
                metric: "frac_nlos".into(),
                analytic: 0.0,
                simulated: sum.frac_nlos,
                statistic: sum.frac_nlos,
                threshold: 0.0,
                pass: sum.frac_nlos == 0.0,
                seed: s.seed,
            });
        }
        Err(e) => return Err(e.into()),
    }
    emit_rows(cfg, &rows, out)?;
    let ok = rows.iter().all(|r| r.pass);
    Ok(if ok { EXIT_OK } else { EXIT_VALIDATION })
}

#[derive(Debug, Serialize)]
struct HeightRow {
    x_c: f64,
    #[serde(rename = "lambda_S")]
    lambda_s: f64,
    #[serde(rename = "h_T_opt")]
    h_t_opt: f64,
    loss_db: f64,
    at_boundary: bool,
}

#[derive(Debug, Serialize)]
struct CurveRow {
    x_c: f64,
    #[serde(rename = "h_T")]
    h_t: f64,
    loss_db: f64,
}

fn optimize_height(cfg: &RunConfig, curve: bool, out: &mut dyn Write) -> CliResult<i32> {
    let tpl = cfg.link_template();
    let base = cfg.cell.to_cell();
    let radii = cfg.cell.radii();
    if curve {
        let n = ((base.h_t_max - base.h_t_min) / 0.1).round() as usize;
        let rows: Vec<CurveRow> = radii
            .par_iter()
            .flat_map_iter(|&x_c| {
                (0..=n).map(move |k| {
                    let h = (base.h_t_min + k as f64 * 0.1).min(base.h_t_max);
                    CurveRow {
                        x_c,
                        h_t: h,
                        loss_db: average_path_loss_at(&tpl, h, x_c, base.lambda_s),
                    }
                })
            })
            .collect();
        emit_rows(cfg, &rows, out)?;
        return Ok(EXIT_OK);
    }
    let rows = radii
        .par_iter()
        .map(|&x_c| {
            let cell = CellConfig { x_c, ..base };
            optimal_ap_height(&cell, &tpl).map(|o| HeightRow {
                x_c,
                lambda_s: cell.lambda_s,
                h_t_opt: o.h_t,
                loss_db: o.loss_db,
                at_boundary: o.at_boundary,
            })
        })
        .collect::<crate::error::Result<Vec<_>>>()?;
    emit_rows(cfg, &rows, out)?;
    Ok(EXIT_OK)
}

#[derive(Debug, Serialize)]
struct RangeRow {
    target_rate: f64,
    radius: f64,
    saturated: bool,
    edge_rate: f64,
    average_rate: f64,
}

fn cell_range(cfg: &RunConfig, targets: &[f64], out: &mut dyn Write) -> CliResult<i32> {
    let tpl = cfg.link_template();
    let radio = cfg.radio.to_radio();
    let base = cfg.cell.to_cell();
    let targets = if targets.is_empty() {
        &cfg.cell.target_rates[..]
    } else {
        targets
    };
    let rows = targets
        .par_iter()
        .map(|&k| {
            let res = max_cell_radius(k, &base, &radio, &tpl)?;
            let cell = CellConfig {
                x_c: res.radius,
                ..base
            };
            Ok(RangeRow {
                target_rate: k,
                radius: res.radius,
                saturated: res.saturated,
                edge_rate: cell_edge_mean_rate(&cell, &radio, &tpl)?,
                average_rate: cell_average_rate(&cell, &radio, &tpl)?,
            })
        })
        .collect::<crate::error::Result<Vec<_>>>()?;
    emit_rows(cfg, &rows, out)?;
    Ok(EXIT_OK)
}

#[derive(Debug, Serialize)]
struct BenchCsvRow {
    #[serde(rename = "T_U")]
    t_u: f64,
    #[serde(rename = "lambda_I")]
    lambda_i: f64,
    method: &'static str,
    mean_time: f64,
    stdev: f64,
}

fn bench(cfg: &RunConfig, out: &mut dyn Write) -> CliResult<i32> {
    let report = run_complexity_benchmark(&cfg.scenario_config(), &cfg.bench)?;
    match cfg.output.format {
        OutputFormat::Json => emit_json(&report, out)?,
        OutputFormat::Csv => {
            let rows: Vec<BenchCsvRow> = report
                .rows
                .iter()
                .map(|r| BenchCsvRow {
                    t_u: r.t_u,
                    lambda_i: r.lambda_i,
                    method: r.method.name(),
                    mean_time: r.mean_time,
                    stdev: r.stdev,
                })
                .collect();
            emit_rows(cfg, &rows, out)?;
        }
    }
    Ok(EXIT_OK)
}
