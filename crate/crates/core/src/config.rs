//! TOML run configuration shared by every CLI subcommand.
//!
//! Omitted fields take the baseline values. Keys keep the physical
//! symbols (`h_T`, `lambda_I`, …); `alpha` is given in degrees.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::applications::{CellConfig, LinkTemplate, LogBase, RadioConfig};
use crate::conditional::ConditionalOptions;
use crate::error::{BlockageError, Result};
use crate::geometry::LinkGeometry;
use crate::renewal::{BlockedOptions, BusyPeriodSolver, ModelOptions};
use crate::residence::{ScenarioConfig, ScenarioKind, DEFAULT_GRID_INTERVALS};
use crate::simulator::{BenchOptions, SimulationMode};

fn config_err(path: &str, reason: impl Into<String>) -> BlockageError {
    BlockageError::Config {
        path: path.to_string(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSection {
    pub kind: ScenarioKind,
    #[serde(rename = "h_T")]
    pub h_t: f64,
    #[serde(rename = "h_R")]
    pub h_r: f64,
    #[serde(rename = "h_B")]
    pub h_b: f64,
    pub d_m: f64,
    pub r_0: f64,
    #[serde(rename = "w_S")]
    pub w_s: f64,
    /// Degrees.
    pub alpha: f64,
    #[serde(rename = "V")]
    pub v: f64,
    #[serde(rename = "lambda_I")]
    pub lambda_i: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        Self {
            alpha: 30.0,
            ..Self::from(&ScenarioConfig::default())
        }
    }
}

impl From<&ScenarioConfig> for ScenarioSection {
    fn from(cfg: &ScenarioConfig) -> Self {
        let l = &cfg.link;
        Self {
            kind: cfg.kind,
            h_t: l.h_t,
            h_r: l.h_r,
            h_b: l.h_b,
            d_m: l.d_m,
            r_0: l.r_0,
            w_s: l.w_s,
            alpha: l.alpha.to_degrees(),
            v: cfg.v,
            lambda_i: cfg.lambda_i,
            c: cfg.c,
        }
    }
}

impl ScenarioSection {
    pub fn to_scenario(&self) -> ScenarioConfig {
        ScenarioConfig {
            kind: self.kind,
            link: LinkGeometry {
                h_t: self.h_t,
                h_r: self.h_r,
                h_b: self.h_b,
                d_m: self.d_m,
                r_0: self.r_0,
                w_s: self.w_s,
                alpha: self.alpha.to_radians(),
            },
            v: self.v,
            lambda_i: self.lambda_i,
            c: self.c,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadioSection {
    pub carrier_ghz: f64,
    pub bandwidth_hz: f64,
    pub tx_power_dbm: f64,
    pub noise_dbm: f64,
    pub c: f64,
    pub log_base: LogBase,
}

impl Default for RadioSection {
    fn default() -> Self {
        let r = RadioConfig::default();
        Self {
            carrier_ghz: r.carrier_ghz,
            bandwidth_hz: r.bandwidth_hz,
            tx_power_dbm: r.tx_power_dbm,
            noise_dbm: r.noise_dbm,
            c: r.c,
            log_base: r.log_base,
        }
    }
}

impl RadioSection {
    pub fn to_radio(&self) -> RadioConfig {
        RadioConfig {
            carrier_ghz: self.carrier_ghz,
            bandwidth_hz: self.bandwidth_hz,
            tx_power_dbm: self.tx_power_dbm,
            noise_dbm: self.noise_dbm,
            c: self.c,
            log_base: self.log_base,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CellSection {
    #[serde(rename = "lambda_S")]
    pub lambda_s: f64,
    #[serde(rename = "lambda_N")]
    pub lambda_n: f64,
    pub x_c: f64,
    /// AP height for the rate computations.
    #[serde(rename = "h_T")]
    pub h_t: f64,
    #[serde(rename = "h_T_min")]
    pub h_t_min: f64,
    #[serde(rename = "h_T_max")]
    pub h_t_max: f64,
    pub radius_min: f64,
    pub radius_max: f64,
    /// Cell radii swept by `optimize-height`; empty means `[x_c]`.
    pub sweep_radii: Vec<f64>,
    /// Edge-rate targets for `cell-range`, b/s.
    pub target_rates: Vec<f64>,
}

impl Default for CellSection {
    fn default() -> Self {
        let c = CellConfig::default();
        Self {
            lambda_s: c.lambda_s,
            lambda_n: c.lambda_n,
            x_c: c.x_c,
            h_t: c.h_t,
            h_t_min: c.h_t_min,
            h_t_max: c.h_t_max,
            radius_min: c.radius_min,
            radius_max: c.radius_max,
            sweep_radii: Vec::new(),
            target_rates: vec![1e8],
        }
    }
}

impl CellSection {
    pub fn to_cell(&self) -> CellConfig {
        CellConfig {
            lambda_s: self.lambda_s,
            lambda_n: self.lambda_n,
            x_c: self.x_c,
            h_t: self.h_t,
            h_t_min: self.h_t_min,
            h_t_max: self.h_t_max,
            radius_min: self.radius_min,
            radius_max: self.radius_max,
        }
    }

    pub fn radii(&self) -> Vec<f64> {
        if self.sweep_radii.is_empty() {
            vec![self.x_c]
        } else {
            self.sweep_radii.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NumericSection {
    pub grid_intervals: usize,
    pub solver: BusyPeriodSolver,
    /// Fixed-point solver only.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub tail: f64,
    pub epsilon: f64,
    pub max_terms: usize,
    /// Largest lag emitted by `conditional`, seconds.
    pub delta_t_max: f64,
    pub delta_t_step: f64,
    /// Grid intervals of the chord table used by the cell computations.
    pub cell_grid_intervals: usize,
}

impl Default for NumericSection {
    fn default() -> Self {
        let b = BlockedOptions::default();
        let c = ConditionalOptions::default();
        Self {
            grid_intervals: DEFAULT_GRID_INTERVALS,
            solver: b.solver,
            tolerance: b.tolerance,
            max_iterations: b.max_iterations,
            tail: b.tail,
            epsilon: c.epsilon,
            max_terms: c.max_terms,
            delta_t_max: 10.0,
            delta_t_step: 0.1,
            cell_grid_intervals: LinkTemplate::default().grid_intervals,
        }
    }
}

impl NumericSection {
    pub fn model_options(&self) -> ModelOptions {
        ModelOptions {
            grid_intervals: self.grid_intervals,
            blocked: BlockedOptions {
                solver: self.solver,
                tolerance: self.tolerance,
                max_iterations: self.max_iterations,
                tail: self.tail,
                step: None,
            },
        }
    }

    pub fn conditional_options(&self) -> ConditionalOptions {
        ConditionalOptions {
            epsilon: self.epsilon,
            max_terms: self.max_terms,
            ..ConditionalOptions::default()
        }
    }

    /// Lags `0, step, 2·step, …, delta_t_max`.
    pub fn lags(&self) -> Vec<f64> {
        let n = (self.delta_t_max / self.delta_t_step + 1e-9).floor() as usize;
        (0..=n).map(|k| k as f64 * self.delta_t_step).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationSection {
    pub duration: f64,
    pub seed: u64,
    pub mode: SimulationMode,
    /// Lags of the two-point estimates, seconds.
    pub lags: Vec<f64>,
    /// Largest KS distance accepted by `validate`.
    pub ks_threshold: f64,
    /// Largest relative error of the NLoS fraction accepted by `validate`.
    pub frac_tolerance: f64,
}

impl Default for SimulationSection {
    fn default() -> Self {
        Self {
            duration: 1e5,
            seed: 1,
            mode: SimulationMode::Rectangle,
            lags: vec![0.1, 0.5, 1.0, 2.0],
            ks_threshold: 0.02,
            frac_tolerance: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = BlockageError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            _ => Err(config_err(
                "output.format",
                format!("unknown format `{s}` (csv|json)"),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    /// Output file; standard output when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    pub format: OutputFormat,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: ScenarioSection,
    pub radio: RadioSection,
    pub cell: CellSection,
    pub numeric: NumericSection,
    pub simulation: SimulationSection,
    pub bench: BenchOptions,
    pub output: OutputSection,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| {
            let path = e
                .span()
                .map(|s| locate_key(text, s.start))
                .unwrap_or_else(|| "<root>".to_string());
            config_err(&path, e.message().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err("<file>", format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }

    pub fn scenario_config(&self) -> ScenarioConfig {
        self.scenario.to_scenario()
    }

    pub fn link_template(&self) -> LinkTemplate {
        LinkTemplate {
            h_r: self.scenario.h_r,
            h_b: self.scenario.h_b,
            d_m: self.scenario.d_m,
            v: self.scenario.v,
            grid_intervals: self.numeric.cell_grid_intervals,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let sc = self.scenario_config();
        sc.validate().map_err(|e| match e {
            BlockageError::DegenerateGeometry(reason) => config_err("scenario.h_T", reason),
            other => other.in_section("scenario"),
        })?;
        self.radio
            .to_radio()
            .validate()
            .map_err(|e| e.in_section("radio"))?;
        let tpl = self.link_template();
        self.cell
            .to_cell()
            .validate(&tpl)
            .map_err(|e| e.in_section("cell"))?;
        if self.cell.sweep_radii.iter().any(|x| !(*x > 0.0)) {
            return Err(config_err("cell.sweep_radii", "radii must be > 0"));
        }
        if self.cell.target_rates.iter().any(|k| !k.is_finite()) {
            return Err(config_err("cell.target_rates", "targets must be finite"));
        }

        let n = &self.numeric;
        let positive = [
            ("numeric.tolerance", n.tolerance),
            ("numeric.tail", n.tail),
            ("numeric.epsilon", n.epsilon),
            ("numeric.delta_t_step", n.delta_t_step),
        ];
        for (path, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(config_err(path, "must be finite and > 0"));
            }
        }
        if !(n.delta_t_max >= 0.0 && n.delta_t_max.is_finite()) {
            return Err(config_err("numeric.delta_t_max", "must be finite and >= 0"));
        }
        for (path, v) in [
            ("numeric.grid_intervals", n.grid_intervals),
            ("numeric.max_iterations", n.max_iterations),
            ("numeric.max_terms", n.max_terms),
            ("numeric.cell_grid_intervals", n.cell_grid_intervals),
        ] {
            if v < 2 {
                return Err(config_err(path, "must be >= 2"));
            }
        }

        let s = &self.simulation;
        if !(s.duration > 0.0 && s.duration.is_finite()) {
            return Err(config_err("simulation.duration", "must be finite and > 0"));
        }
        if s.lags.iter().any(|l| !(*l >= 0.0 && l.is_finite())) {
            return Err(config_err(
                "simulation.lags",
                "lags must be finite and >= 0",
            ));
        }
        if !(s.ks_threshold > 0.0) {
            return Err(config_err("simulation.ks_threshold", "must be > 0"));
        }
        if !(s.frac_tolerance > 0.0) {
            return Err(config_err("simulation.frac_tolerance", "must be > 0"));
        }

        let b = &self.bench;
        if !(b.duration > 0.0) {
            return Err(config_err("bench.duration", "must be > 0"));
        }
        if b.update_intervals.is_empty() || b.update_intervals.iter().any(|t| !(*t > 0.0)) {
            return Err(config_err(
                "bench.update_intervals",
                "needs at least one value > 0",
            ));
        }
        if b.intensities.is_empty() || b.intensities.iter().any(|l| !(*l > 0.0)) {
            return Err(config_err(
                "bench.intensities",
                "needs at least one value > 0",
            ));
        }
        if b.repetitions == 0 {
            return Err(config_err("bench.repetitions", "must be >= 1"));
        }
        if !(b.strip_length > 0.0) {
            return Err(config_err("bench.strip_length", "must be > 0"));
        }
        Ok(())
    }
}

/// Dotted path of the key that owns byte offset `pos`: the nearest
/// `[section]` header above it plus the key on its line.
fn locate_key(text: &str, pos: usize) -> String {
    let mut section = String::new();
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        let trimmed = line.trim();
        if offset + line.len() > pos {
            let key = trimmed.split('=').next().unwrap_or("").trim();
            if key.is_empty() || trimmed.starts_with('[') {
                return if section.is_empty() {
                    "<root>".into()
                } else {
                    section
                };
            }
            return if section.is_empty() {
                key.to_string()
            } else {
                format!("{section}.{key}")
            };
        }
        if trimmed.starts_with('[') && trimmed.ends_with(']') {
            section = trimmed
                .trim_matches(|c| c == '[' || c == ']')
                .trim()
                .to_string();
        }
        offset += line.len();
    }
    if section.is_empty() {
        "<root>".into()
    } else {
        section
    }
}
