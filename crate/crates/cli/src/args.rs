// SPDX-License-Identifier: MIT OR Apache-2.0

use std::path::PathBuf;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use nsqcd::grid::ParamBox;
use nsqcd::models::{BetaWaveParams, DecayParams, GemParams, Model};
use nsqcd::montecarlo::DetectorKind;

use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "nsqcd", version, about = "Window-limited CuSum and GLR change detection")]
pub struct Cli {
    /// Flat TOML file of long-flag defaults; command-line flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print threshold and window for a target false-alarm rate.
    Calibrate(CalibrateArgs),
    /// Delay versus alpha table.
    SimulateOc(SimulateOcArgs),
    /// Geometric QQ diagnostics for no-change stopping times.
    SimulateQq(SimulateQqArgs),
    /// Mean time to false alarm.
    EstimateMtfa(EstimateArgs),
    /// Conditional average detection delay.
    EstimateAdd(EstimateAddArgs),
    /// Growth-condition and variance/time-shift reports.
    Diagnostics(DiagnosticsArgs),
    /// Run the WL-GLR monitor over a case-count file.
    MonitorEpi(MonitorEpiArgs),
    /// Fit the Beta pre-change law and the wave shape to a case-count file.
    FitEpi(FitEpiArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Calibrate(_) => "calibrate",
            Command::SimulateOc(_) => "simulate-oc",
            Command::SimulateQq(_) => "simulate-qq",
            Command::EstimateMtfa(_) => "estimate-mtfa",
            Command::EstimateAdd(_) => "estimate-add",
            Command::Diagnostics(_) => "diagnostics",
            Command::MonitorEpi(_) => "monitor-epi",
            Command::FitEpi(_) => "fit-epi",
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Gem,
    Decay,
    BetaWave,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ModelArgs {
    #[arg(long, value_enum)]
    pub model: ModelKind,
    /// GEM initial post-change mean.
    #[arg(long)]
    pub mu0: Option<f64>,
    /// GEM variance.
    #[arg(long)]
    pub sigma0_sq: Option<f64>,
    /// Decay initial post-change mean.
    #[arg(long)]
    pub mu1: Option<f64>,
    /// Decay variance.
    #[arg(long)]
    pub sigma_sq: Option<f64>,
    /// Beta-wave pre-change shapes.
    #[arg(long)]
    pub a0: Option<f64>,
    #[arg(long)]
    pub b0: Option<f64>,
    /// Post-change parameter; three comma-separated values for beta-wave.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub theta: Vec<f64>,
}

fn need(value: Option<f64>, flag: &str, model: &str) -> CliResult<f64> {
    value.ok_or_else(|| CliError::usage(format!("--{flag} is required for --model {model}")))
}

impl ModelArgs {
    pub fn build(&self) -> CliResult<Model> {
        let scalar_theta = |name: &str| -> CliResult<f64> {
            match self.theta.as_slice() {
                [t] => Ok(*t),
                _ => Err(CliError::usage(format!("--theta needs one value for --model {name}"))),
            }
        };
        Ok(match self.model {
            ModelKind::Gem => Model::Gem(GemParams::new(
                need(self.mu0, "mu0", "gem")?,
                need(self.sigma0_sq, "sigma0-sq", "gem")?,
                scalar_theta("gem")?,
            )?),
            ModelKind::Decay => Model::Decay(DecayParams::new(
                need(self.mu1, "mu1", "decay")?,
                need(self.sigma_sq, "sigma-sq", "decay")?,
                scalar_theta("decay")?,
            )?),
            ModelKind::BetaWave => {
                let theta: [f64; 3] = self.theta.as_slice().try_into().map_err(|_| {
                    CliError::usage("--theta needs three values for --model beta-wave")
                })?;
                Model::BetaWave(BetaWaveParams::new(
                    need(self.a0, "a0", "beta-wave")?,
                    need(self.b0, "b0", "beta-wave")?,
                    theta,
                )?)
            }
        })
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetectorArg {
    WlCusum,
    FullCusum,
    WlGlr,
}

impl From<DetectorArg> for DetectorKind {
    fn from(d: DetectorArg) -> Self {
        match d {
            DetectorArg::WlCusum => DetectorKind::WlCusum,
            DetectorArg::FullCusum => DetectorKind::FullCusum,
            DetectorArg::WlGlr => DetectorKind::WlGlr,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DetectorArgs {
    #[arg(long, value_enum, default_value = "wl-cusum")]
    pub detector: DetectorArg,
    /// Fixed window; sized from the growth function when omitted.
    #[arg(long)]
    pub window: Option<u64>,
    /// Window safety factor.
    #[arg(long, default_value_t = nsqcd::calibration::DEFAULT_SAFETY)]
    pub safety: f64,
    /// GLR parameter box, e.g. `0:0.5` or `0.1:5,1:20,0.1:5`.
    #[arg(long)]
    pub theta_box: Option<String>,
    /// GLR grid points per axis (one value applies to every axis).
    #[arg(long, value_delimiter = ',', default_value = "50")]
    pub grid_points: Vec<usize>,
    /// GLR epsilon; defaults to the GEM recipe for --model gem.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Slack in the GEM epsilon recipe.
    #[arg(long, default_value_t = nsqcd::calibration::DEFAULT_GEM_DELTA)]
    pub gem_delta: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimArgs {
    /// Master seed; every trial derives its own stream from it.
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    /// Censoring cap per trial.
    #[arg(long)]
    pub max_steps: Option<u64>,
    /// Worker threads; defaults to the number of logical cores.
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OutArgs {
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CalibrateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub detector: DetectorArgs,
    #[arg(long)]
    pub alpha: f64,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateOcArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub detector: DetectorArgs,
    #[arg(long, value_delimiter = ',', default_value = "0.01,0.001,0.0001")]
    pub alphas: Vec<f64>,
    /// Change point.
    #[arg(long, default_value_t = 1)]
    pub nu: u64,
    #[command(flatten)]
    pub sim: SimArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ThresholdArgs {
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Explicit threshold; overrides the one calibrated from --alpha.
    #[arg(long, allow_hyphen_values = true)]
    pub threshold: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateQqArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub detector: DetectorArgs,
    #[command(flatten)]
    pub level: ThresholdArgs,
    #[command(flatten)]
    pub sim: SimArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub detector: DetectorArgs,
    #[command(flatten)]
    pub level: ThresholdArgs,
    #[command(flatten)]
    pub sim: SimArgs,
    /// Allow MTFA runs below alpha = 1e-4.
    #[arg(long)]
    pub force: bool,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EstimateAddArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub detector: DetectorArgs,
    #[command(flatten)]
    pub level: ThresholdArgs,
    #[arg(long, default_value_t = 1)]
    pub nu: u64,
    #[command(flatten)]
    pub sim: SimArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DiagnosticsArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Upper end of the growth-condition grid.
    #[arg(long, default_value_t = 1000.0)]
    pub x_max: f64,
    /// Horizon of the variance and time-shift report.
    #[arg(long, default_value_t = 200)]
    pub n_max: u64,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EpiInputArgs {
    /// CSV with header `date,cases`.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub population: u64,
    /// Counts are running totals.
    #[arg(long)]
    pub cumulative: bool,
    #[arg(long)]
    pub region: Option<String>,
    /// Moving-average width in days.
    #[arg(long, default_value_t = 4)]
    pub smoothing: usize,
    /// First monitored day; the pre-change fit uses the days before it.
    #[arg(long)]
    pub start_date: NaiveDate,
    #[arg(long, default_value_t = 20)]
    pub prechange_days: usize,
    #[arg(long, default_value = "0.1:5,1:20,0.1:5")]
    pub theta_box: String,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct MonitorEpiArgs {
    #[command(flatten)]
    pub input: EpiInputArgs,
    #[arg(long, default_value_t = 0.001)]
    pub alpha: f64,
    #[arg(long, default_value_t = 20)]
    pub window: u64,
    #[arg(long, value_delimiter = ',', default_value = "12")]
    pub grid_points: Vec<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub epsilon: f64,
    /// Explicit threshold instead of the threshold equation.
    #[arg(long, allow_hyphen_values = true)]
    pub threshold: Option<f64>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FitEpiArgs {
    #[command(flatten)]
    pub input: EpiInputArgs,
    /// Last day of the wave fit; defaults to the end of the file.
    #[arg(long)]
    pub end_date: Option<NaiveDate>,
    #[arg(long, default_value_t = 20)]
    pub restarts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub out: OutArgs,
}

/// Parses `lo:hi,lo:hi,...`.
pub fn parse_box(text: &str) -> CliResult<ParamBox> {
    let bounds = text
        .split(',')
        .map(|part| {
            let (lo, hi) = part
                .split_once(':')
                .ok_or_else(|| CliError::usage(format!("--theta-box entry `{part}` is not lo:hi")))?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| CliError::usage(format!("--theta-box value `{s}` is not a number")))
            };
            Ok((parse(lo)?, parse(hi)?))
        })
        .collect::<CliResult<Vec<_>>>()?;
    ParamBox::new(bounds).map_err(|e| CliError::usage(format!("--theta-box: {e}")))
}

/// Expands a single count to every axis.
pub fn grid_counts(counts: &[usize], dim: usize) -> CliResult<Vec<usize>> {
    match counts {
        [c] => Ok(vec![*c; dim]),
        c if c.len() == dim => Ok(c.to_vec()),
        _ => Err(CliError::usage(format!(
            "--grid-points needs 1 or {dim} values, got {}",
            counts.len()
        ))),
    }
}
