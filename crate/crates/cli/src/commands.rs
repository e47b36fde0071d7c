// SPDX-License-Identifier: MIT OR Apache-2.0

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use nsqcd::calibration::{self, GlrThresholdInputs};
use nsqcd::epidata::{
    self, BetaFit, CsvOptions, FractionSeries, MonitorConfig, WaveFit, WaveFitOptions,
};
use nsqcd::grid::{ParamBox, ParamGrid};
use nsqcd::growth::{check_growth_condition, variance_diagnostics, GrowthCurve};
use nsqcd::models::Model;
use nsqcd::montecarlo::{
    self, default_delay_cap, default_mtfa_cap, geometric_qq, DelayEstimate, DetectorKind,
    GlrSetup, OcTemplate, TrialPlan,
};

use crate::args::*;
use crate::error::{CliError, CliResult};
use crate::output::{Manifest, OutputDir};

/// Smallest alpha accepted by `estimate-mtfa` without `--force`.
const MTFA_ALPHA_FLOOR: f64 = 1e-4;

impl Command {
    fn out_dir(&self) -> &Path {
        match self {
            Command::Calibrate(a) => &a.out.out,
            Command::SimulateOc(a) => &a.out.out,
            Command::SimulateQq(a) => &a.out.out,
            Command::EstimateMtfa(a) => &a.out.out,
            Command::EstimateAdd(a) => &a.out.out,
            Command::Diagnostics(a) => &a.out.out,
            Command::MonitorEpi(a) => &a.out.out,
            Command::FitEpi(a) => &a.out.out,
        }
    }

    fn settings(&self) -> serde_json::Value {
        let value = match self {
            Command::Calibrate(a) => serde_json::to_value(a),
            Command::SimulateOc(a) => serde_json::to_value(a),
            Command::SimulateQq(a) => serde_json::to_value(a),
            Command::EstimateMtfa(a) => serde_json::to_value(a),
            Command::EstimateAdd(a) => serde_json::to_value(a),
            Command::Diagnostics(a) => serde_json::to_value(a),
            Command::MonitorEpi(a) => serde_json::to_value(a),
            Command::FitEpi(a) => serde_json::to_value(a),
        };
        value.unwrap_or(serde_json::Value::Null)
    }

    fn seed(&self) -> Option<u64> {
        match self {
            Command::SimulateOc(a) => Some(a.sim.seed),
            Command::SimulateQq(a) => Some(a.sim.seed),
            Command::EstimateMtfa(a) => Some(a.sim.seed),
            Command::EstimateAdd(a) => Some(a.sim.seed),
            Command::FitEpi(a) => Some(a.seed),
            _ => None,
        }
    }
}

/// Runs one subcommand, writes its manifest and returns the exit code.
pub fn dispatch(cli: Cli, argv: Vec<String>) -> u8 {
    let started = Instant::now();
    let command = cli.command;
    let mut out = OutputDir::new(command.out_dir());
    let mut manifest = Manifest::new(command.name(), argv, command.settings());
    manifest.seed = command.seed();
    let result = run(&command, &mut out);
    let code = match &result {
        Ok(()) => 0,
        Err(e) => {
            out.discard();
            manifest.status = "failed";
            manifest.error = Some(e.to_string());
            eprintln!("nsqcd {}: {e}", command.name());
            e.exit_code()
        }
    };
    manifest.outputs = out.file_names();
    manifest.finish(started);
    if let Err(e) = out.write_json("manifest.json", &manifest) {
        eprintln!("nsqcd: cannot write manifest: {e}");
        return code.max(1);
    }
    code
}

fn run(command: &Command, out: &mut OutputDir) -> CliResult<()> {
    match command {
        Command::Calibrate(a) => calibrate(a, out),
        Command::SimulateOc(a) => simulate_oc(a, out),
        Command::SimulateQq(a) => simulate_qq(a, out),
        Command::EstimateMtfa(a) => estimate_mtfa(a, out),
        Command::EstimateAdd(a) => estimate_add(a, out),
        Command::Diagnostics(a) => diagnostics(a, out),
        Command::MonitorEpi(a) => monitor_epi(a, out),
        Command::FitEpi(a) => fit_epi(a, out),
    }
}

fn glr_setup(model: &Model, det: &DetectorArgs) -> CliResult<GlrSetup> {
    let text = det
        .theta_box
        .as_deref()
        .ok_or_else(|| CliError::usage("--theta-box is required for --detector wl-glr"))?;
    let param_box = parse_box(text)?;
    if param_box.dim() != model.post_param_dim() {
        return Err(CliError::usage(format!(
            "--theta-box has {} axes but {} has a {}-dimensional parameter",
            param_box.dim(),
            model.name(),
            model.post_param_dim()
        )));
    }
    let grid = ParamGrid::uniform(&param_box, &grid_counts(&det.grid_points, param_box.dim())?)?;
    let epsilon = match (det.epsilon, model) {
        (Some(e), _) => e,
        (None, Model::Gem(_)) => {
            let (lo, hi) = grid.hull()[0];
            calibration::gem_epsilon(lo, hi, det.gem_delta)?
        }
        (None, _) => {
            return Err(CliError::usage(format!(
                "--epsilon is required for --detector wl-glr with {}",
                model.name()
            )))
        }
    };
    Ok(GlrSetup {
        param_box,
        grid,
        epsilon,
    })
}

#[derive(Debug, Serialize)]
struct Calibrated {
    model: Model,
    detector: DetectorKind,
    alpha: Option<f64>,
    threshold: f64,
    window: u64,
    epsilon: Option<f64>,
    residual: Option<f64>,
    grid_size: Option<usize>,
    notes: Vec<String>,
    #[serde(skip)]
    glr: Option<GlrSetup>,
}

fn resolve(
    model: Model,
    det: &DetectorArgs,
    alpha: Option<f64>,
    threshold: Option<f64>,
) -> CliResult<Calibrated> {
    let kind: DetectorKind = det.detector.into();
    let glr = match kind {
        DetectorKind::WlGlr => Some(glr_setup(&model, det)?),
        _ => None,
    };
    let mut notes = Vec::new();
    let window = match (det.window, alpha, kind) {
        (Some(m), _, _) => m,
        (None, _, DetectorKind::FullCusum) => 0,
        (None, Some(a), _) => {
            let m = calibration::window_size(&GrowthCurve::new(model), a, det.safety)?;
            notes.push(format!("window = ceil({} * g^-1(|ln alpha|)) = {m}", det.safety));
            m
        }
        (None, None, _) => return Err(CliError::usage("--window or --alpha is required")),
    };
    let mut residual = None;
    let threshold = match (threshold, alpha, &glr) {
        (Some(b), _, _) => {
            notes.push("threshold given explicitly".into());
            b
        }
        (None, Some(a), Some(g)) => {
            let inputs = GlrThresholdInputs {
                alpha: a,
                theta_volume: g.param_box.volume(),
                dim: g.param_box.dim(),
                epsilon: g.epsilon,
            };
            let r = calibration::calibrate_glr(&inputs, window)?;
            residual = r.residual;
            notes.extend(r.notes);
            r.threshold
        }
        (None, Some(a), None) => {
            notes.push("threshold = |ln alpha|".into());
            calibration::cusum_threshold(a)?
        }
        (None, None, _) => return Err(CliError::usage("--alpha or --threshold is required")),
    };
    Ok(Calibrated {
        model,
        detector: kind,
        alpha,
        threshold,
        window,
        epsilon: glr.as_ref().map(|g| g.epsilon),
        residual,
        grid_size: glr.as_ref().map(|g| g.grid.len()),
        notes,
        glr,
    })
}

fn calibrate(a: &CalibrateArgs, out: &mut OutputDir) -> CliResult<()> {
    let c = resolve(a.model.build()?, &a.detector, Some(a.alpha), None)?;
    // A closed stdout (e.g. piped into `head`) is not a failure.
    let _ = writeln!(std::io::stdout(), "{}", serde_json::to_string_pretty(&c)?);
    out.write_json("calibration.json", &c)
}

fn plan(c: &Calibrated, sim: &SimArgs, nu: Option<u64>, max_steps: u64) -> TrialPlan {
    TrialPlan {
        model: c.model,
        detector: c.detector,
        threshold: c.threshold,
        window: c.window,
        grid: c.glr.as_ref().map(|g| g.grid.clone()),
        nu,
        num_trials: sim.trials,
        max_steps,
        seed: sim.seed,
    }
}

#[derive(Serialize)]
struct EstimateReport<'a> {
    calibration: &'a Calibrated,
    nu: Option<u64>,
    num_trials: usize,
    max_steps: u64,
    seed: u64,
    estimate: DelayEstimate,
}

fn estimate_mtfa(a: &EstimateArgs, out: &mut OutputDir) -> CliResult<()> {
    let c = resolve(a.model.build()?, &a.detector, a.level.alpha, a.level.threshold)?;
    let implied_alpha = a.level.alpha.unwrap_or((-c.threshold).exp());
    if implied_alpha < MTFA_ALPHA_FLOOR && !a.force {
        return Err(CliError::usage(format!(
            "alpha {implied_alpha:e} is below {MTFA_ALPHA_FLOOR:e}; MTFA runs would take about \
             1/alpha steps per trial (pass --force to run anyway)"
        )));
    }
    let cap = a
        .sim
        .max_steps
        .unwrap_or_else(|| default_mtfa_cap(-implied_alpha.ln()));
    let p = plan(&c, &a.sim, None, cap);
    let estimate = montecarlo::estimate_mtfa(&p, a.sim.workers)?;
    for w in &estimate.warnings {
        log::warn!("{w}");
    }
    out.write_json(
        "mtfa.json",
        &EstimateReport {
            calibration: &c,
            nu: None,
            num_trials: p.num_trials,
            max_steps: cap,
            seed: p.seed,
            estimate,
        },
    )
}

fn estimate_add(a: &EstimateAddArgs, out: &mut OutputDir) -> CliResult<()> {
    let c = resolve(a.model.build()?, &a.detector, a.level.alpha, a.level.threshold)?;
    let cap = a
        .sim
        .max_steps
        .unwrap_or_else(|| a.nu - 1 + default_delay_cap(&c.model, c.threshold));
    let p = plan(&c, &a.sim, Some(a.nu), cap);
    let estimate = montecarlo::estimate_add(&p, a.sim.workers)?;
    for w in &estimate.warnings {
        log::warn!("{w}");
    }
    out.write_json(
        "add.json",
        &EstimateReport {
            calibration: &c,
            nu: Some(a.nu),
            num_trials: p.num_trials,
            max_steps: cap,
            seed: p.seed,
            estimate,
        },
    )
}

fn simulate_oc(a: &SimulateOcArgs, out: &mut OutputDir) -> CliResult<()> {
    let model = a.model.build()?;
    let detector: DetectorKind = a.detector.detector.into();
    let glr = match detector {
        DetectorKind::WlGlr => Some(glr_setup(&model, &a.detector)?),
        _ => None,
    };
    let template = OcTemplate {
        model,
        detector,
        window: a.detector.window,
        safety: a.detector.safety,
        glr,
        nu: a.nu,
        num_trials: a.sim.trials,
        max_steps: a.sim.max_steps,
        seed: a.sim.seed,
    };
    let rows = montecarlo::operating_characteristic(&template, &a.alphas, a.sim.workers)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "alpha",
        "threshold",
        "window",
        "mean_delay",
        "stderr",
        "num_trials",
        "num_uncensored",
        "censor_rate",
        "lower_bound",
    ])?;
    for r in &rows {
        w.write_record([
            r.alpha.to_string(),
            r.threshold.to_string(),
            r.window.to_string(),
            r.delay.mean.to_string(),
            r.delay.stderr.to_string(),
            r.delay.num_trials.to_string(),
            r.delay.num_uncensored.to_string(),
            r.delay.censor_rate.to_string(),
            r.delay.lower_bound.to_string(),
        ])?;
        for warning in &r.delay.warnings {
            log::warn!("alpha {}: {warning}", r.alpha);
        }
    }
    out.write("oc.csv", &w.into_inner().map_err(|e| CliError::Runtime(e.to_string()))?)?;
    out.write_json("oc.json", &rows)
}

#[derive(Serialize)]
struct QqSummary<'a> {
    calibration: &'a Calibrated,
    seed: u64,
    num_trials: usize,
    max_steps: u64,
    censored: usize,
    mean_stopping_time: f64,
    p_hat: f64,
    correlation: f64,
}

fn simulate_qq(a: &SimulateQqArgs, out: &mut OutputDir) -> CliResult<()> {
    let c = resolve(a.model.build()?, &a.detector, a.level.alpha, a.level.threshold)?;
    let cap = a.sim.max_steps.unwrap_or_else(|| default_mtfa_cap(c.threshold));
    let p = plan(&c, &a.sim, None, cap);
    let records = montecarlo::run_trials(&p, a.sim.workers)?;
    let censored = records.iter().filter(|r| r.censored).count();
    if censored > 0 {
        log::warn!("{censored} censored stopping times excluded from the QQ analysis");
    }
    let times: Vec<u64> = records.iter().filter(|r| !r.censored).map(|r| r.time).collect();
    let qq = geometric_qq(&times)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["probability", "theoretical", "empirical"])?;
    for (q, (t, e)) in qq.probabilities.iter().zip(&qq.pairs) {
        w.write_record([q.to_string(), t.to_string(), e.to_string()])?;
    }
    out.write("qq.csv", &w.into_inner().map_err(|e| CliError::Runtime(e.to_string()))?)?;
    let mean = times.iter().map(|&t| t as f64).sum::<f64>() / times.len() as f64;
    out.write_json(
        "qq.json",
        &QqSummary {
            calibration: &c,
            seed: p.seed,
            num_trials: p.num_trials,
            max_steps: cap,
            censored,
            mean_stopping_time: mean,
            p_hat: qq.p_hat,
            correlation: qq.correlation,
        },
    )
}

fn diagnostics(a: &DiagnosticsArgs, out: &mut OutputDir) -> CliResult<()> {
    let model = a.model.build()?;
    let curve = GrowthCurve::new(model);
    let growth = check_growth_condition(&curve, a.x_max)?;
    let variance = variance_diagnostics(&model, a.n_max)?;

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["x", "g_inverse", "log_g_inverse_over_x"])?;
    for (x, r) in growth.grid.iter().zip(&growth.ratios) {
        let inv = curve.growth_inverse(*x).map(|t| t.to_string()).unwrap_or_default();
        w.write_record([x.to_string(), inv, r.map(|v| v.to_string()).unwrap_or_default()])?;
    }
    out.write(
        "growth_condition.csv",
        &w.into_inner().map_err(|e| CliError::Runtime(e.to_string()))?,
    )?;

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["n", "growth", "variance_ratio"])?;
    for (n, v) in variance.n.iter().zip(&variance.variance_ratio) {
        w.write_record([n.to_string(), curve.growth(*n).to_string(), v.to_string()])?;
    }
    out.write("variance.csv", &w.into_inner().map_err(|e| CliError::Runtime(e.to_string()))?)?;

    #[derive(Serialize)]
    struct Summary {
        model: Model,
        growth_condition_trend_decreasing: bool,
        x_max: f64,
        final_variance_ratio: Option<f64>,
        time_shift_min: f64,
        time_shift_argmin: (u64, u64),
    }
    out.write_json(
        "diagnostics.json",
        &Summary {
            model,
            growth_condition_trend_decreasing: growth.decreasing_top_decade,
            x_max: a.x_max,
            final_variance_ratio: variance.variance_ratio.last().copied(),
            time_shift_min: variance.time_shift_min,
            time_shift_argmin: variance.time_shift_argmin,
        },
    )
}

struct EpiData {
    region: String,
    series: FractionSeries,
    start: usize,
    beta: BetaFit,
    theta_box: ParamBox,
}

fn prepare_epi(a: &EpiInputArgs) -> CliResult<EpiData> {
    let region = a.region.clone().unwrap_or_else(|| {
        a.input
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    });
    let cases = epidata::load_case_csv(
        &a.input,
        &CsvOptions {
            population: a.population,
            cumulative: a.cumulative,
            region: region.clone(),
        },
    )
    .map_err(|e| match e {
        nsqcd::Error::Io(io) => {
            CliError::Runtime(format!("cannot read {}: {io}", a.input.display()))
        }
        other => other.into(),
    })?;
    let series = epidata::to_fraction_series(&cases, a.smoothing)?.clamp_zeros()?;
    let start = series.position(a.start_date).ok_or_else(|| {
        CliError::usage(format!("--start-date {} is after the last observation", a.start_date))
    })?;
    if start < a.prechange_days {
        return Err(CliError::usage(format!(
            "--start-date {} leaves {start} smoothed days before it; --prechange-days needs {}",
            a.start_date, a.prechange_days
        )));
    }
    let beta = epidata::fit_beta_prechange(&series.slice(0, start), a.prechange_days)?;
    Ok(EpiData {
        region,
        series,
        start,
        beta,
        theta_box: parse_box(&a.theta_box)?,
    })
}

fn monitor_epi(a: &MonitorEpiArgs, out: &mut OutputDir) -> CliResult<()> {
    let data = prepare_epi(&a.input)?;
    let config = MonitorConfig {
        grid_counts: grid_counts(&a.grid_points, data.theta_box.dim())?,
        theta_box: data.theta_box.clone(),
        alpha: a.alpha,
        window: a.window,
        epsilon: a.epsilon,
        threshold: a.threshold,
    };
    let monitored = data.series.slice(data.start, data.series.len());
    let result = epidata::monitor(&monitored, &data.beta, &config)?;
    let mut csv_bytes = Vec::new();
    epidata::write_trajectory_csv(&mut csv_bytes, &result)?;
    out.write("trajectory.csv", &csv_bytes)?;

    #[derive(Serialize)]
    struct Summary<'a> {
        region: &'a str,
        beta: &'a BetaFit,
        config: &'a MonitorConfig,
        threshold: f64,
        days_monitored: usize,
        first_crossing: Option<chrono::NaiveDate>,
        max_statistic: f64,
    }
    out.write_json(
        "summary.json",
        &Summary {
            region: &data.region,
            beta: &data.beta,
            config: &config,
            threshold: result.threshold,
            days_monitored: result.trajectory.len(),
            first_crossing: result.first_crossing,
            max_statistic: result
                .trajectory
                .iter()
                .map(|p| p.output.statistic)
                .fold(0.0, f64::max),
        },
    )
}

fn fit_epi(a: &FitEpiArgs, out: &mut OutputDir) -> CliResult<()> {
    let data = prepare_epi(&a.input)?;
    let end = match a.end_date {
        Some(d) => data.series.dates.partition_point(|x| *x <= d),
        None => data.series.len(),
    };
    if end <= data.start {
        return Err(CliError::usage("--end-date must not precede --start-date"));
    }
    let segment = data.series.slice(data.start, end);
    let options = WaveFitOptions {
        restarts: a.restarts,
        seed: a.seed,
        ..WaveFitOptions::default()
    };
    let wave = epidata::fit_wave_shape(&segment, &data.beta, &data.theta_box, &options)?;

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["date", "observed", "fitted_mean"])?;
    for (lag, (d, x)) in segment.dates.iter().zip(&segment.values).enumerate() {
        let shape = data.beta.a0 * epidata::h_function(&wave.theta, lag as f64)?;
        w.write_record([
            d.to_string(),
            x.to_string(),
            (shape / (shape + data.beta.b0)).to_string(),
        ])?;
    }
    out.write("fit.csv", &w.into_inner().map_err(|e| CliError::Runtime(e.to_string()))?)?;

    #[derive(Serialize)]
    struct Summary<'a> {
        region: &'a str,
        beta: &'a BetaFit,
        wave: &'a WaveFit,
        theta_box: &'a ParamBox,
        fit_days: usize,
    }
    out.write_json(
        "fit.json",
        &Summary {
            region: &data.region,
            beta: &data.beta,
            wave: &wave,
            theta_box: &data.theta_box,
            fit_days: segment.len(),
        },
    )
}
