// SPDX-License-Identifier: MIT OR Apache-2.0

//! Monte-Carlo evaluation of detectors: mean time to false alarm, conditional
//! detection delay, operating characteristics and geometric QQ diagnostics.
//!
//! Trial `i` draws from its own stream derived from `(seed, i)` and results
//! are reduced in trial order, so estimates are identical for any worker count.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::calibration::{self, GlrThresholdInputs};
use crate::detectors::{
    run_until_alarm, Detector, DetectorOutput, FullCusum, StoppingRecord, WlCusum, WlGlr,
};
use crate::error::{Error, Result};
use crate::grid::{ParamBox, ParamGrid};
use crate::growth::GrowthCurve;
use crate::models::Model;
use crate::rng::trial_rng;

/// Censoring rate above which delay estimates carry a warning.
pub const CENSOR_WARNING_RATE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetectorKind {
    WlCusum,
    FullCusum,
    WlGlr,
}

/// One Monte-Carlo experiment.
///
/// `model` generates the data. CuSum detectors use it as the known post-change
/// law; the GLR maximizes over `grid` with `model` as the base.
#[derive(Debug, Clone)]
pub struct TrialPlan {
    pub model: Model,
    pub detector: DetectorKind,
    pub threshold: f64,
    pub window: u64,
    pub grid: Option<ParamGrid>,
    /// Change point; `None` means no change.
    pub nu: Option<u64>,
    pub num_trials: usize,
    pub max_steps: u64,
    pub seed: u64,
}

impl TrialPlan {
    fn validate(&self) -> Result<()> {
        if self.num_trials == 0 {
            return Err(Error::argument("num_trials must be >= 1"));
        }
        if self.max_steps == 0 {
            return Err(Error::argument("max_steps must be >= 1"));
        }
        if self.nu == Some(0) {
            return Err(Error::argument("change point must be >= 1"));
        }
        Ok(())
    }
}

/// Type-erased detector used by the trial runner.
#[derive(Debug, Clone)]
pub enum AnyDetector {
    WlCusum(WlCusum<Model>),
    FullCusum(FullCusum<Model>),
    WlGlr(Box<WlGlr>),
}

impl AnyDetector {
    pub fn from_plan(plan: &TrialPlan) -> Result<Self> {
        Ok(match plan.detector {
            DetectorKind::WlCusum => {
                AnyDetector::WlCusum(WlCusum::new(plan.model, plan.threshold, plan.window))
            }
            DetectorKind::FullCusum => {
                AnyDetector::FullCusum(FullCusum::new(plan.model, plan.threshold))
            }
            DetectorKind::WlGlr => {
                let grid = plan
                    .grid
                    .clone()
                    .ok_or_else(|| Error::argument("wl-glr needs a parameter grid"))?;
                AnyDetector::WlGlr(Box::new(WlGlr::new(
                    plan.model,
                    grid,
                    plan.threshold,
                    plan.window,
                )?))
            }
        })
    }
}

impl Detector for AnyDetector {
    fn step(&mut self, x: f64) -> Result<DetectorOutput> {
        match self {
            AnyDetector::WlCusum(d) => d.step(x),
            AnyDetector::FullCusum(d) => d.step(x),
            AnyDetector::WlGlr(d) => d.step(x),
        }
    }

    fn threshold(&self) -> f64 {
        match self {
            AnyDetector::WlCusum(d) => d.threshold(),
            AnyDetector::FullCusum(d) => d.threshold(),
            AnyDetector::WlGlr(d) => d.threshold(),
        }
    }

    fn time(&self) -> u64 {
        match self {
            AnyDetector::WlCusum(d) => d.time(),
            AnyDetector::FullCusum(d) => d.time(),
            AnyDetector::WlGlr(d) => d.time(),
        }
    }

    fn reset(&mut self) {
        match self {
            AnyDetector::WlCusum(d) => d.reset(),
            AnyDetector::FullCusum(d) => d.reset(),
            AnyDetector::WlGlr(d) => d.reset(),
        }
    }
}

/// Observation stream: pre-change draws before `nu`, post-change from `nu` on.
pub fn observations<'a, R: Rng>(
    model: &'a Model,
    nu: Option<u64>,
    rng: &'a mut R,
) -> impl Iterator<Item = f64> + 'a {
    let pre = model.pre_law();
    let mut n = 0u64;
    std::iter::from_fn(move || {
        n += 1;
        Some(match nu {
            Some(v) if n >= v => model.post_law(n - v).sample(rng),
            _ => pre.sample(rng),
        })
    })
}

/// Runs `count` independent trials of `trial`, optionally on a dedicated pool.
pub fn run_parallel<T, F>(count: usize, workers: Option<usize>, trial: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    use rayon::prelude::*;
    let run = || (0..count).into_par_iter().map(&trial).collect::<Result<Vec<T>>>();
    match workers {
        None => run(),
        Some(0) => Err(Error::argument("workers must be >= 1")),
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| Error::Argument(format!("cannot build worker pool: {e}")))?
            .install(run),
    }
}

/// Stopping records for every trial, in trial order.
pub fn run_trials(plan: &TrialPlan, workers: Option<usize>) -> Result<Vec<StoppingRecord>> {
    plan.validate()?;
    let prototype = AnyDetector::from_plan(plan)?;
    run_parallel(plan.num_trials, workers, |i| {
        let mut detector = prototype.clone();
        let mut rng = trial_rng(plan.seed, i as u64);
        let stream = observations(&plan.model, plan.nu, &mut rng);
        run_until_alarm(&mut detector, stream, plan.max_steps)
    })
}

/// Sample mean of stopping times or delays with its standard error.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DelayEstimate {
    pub mean: f64,
    pub stderr: f64,
    /// Trials entering the estimate.
    pub num_trials: usize,
    pub num_uncensored: usize,
    pub censor_rate: f64,
    /// Set when censored trials entered at their cap, so `mean` is a lower bound.
    pub lower_bound: bool,
    pub warnings: Vec<String>,
}

fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn summarize(values: &[f64], censored: usize, total: usize) -> DelayEstimate {
    let (mean, stderr) = mean_stderr(values);
    let censor_rate = censored as f64 / total as f64;
    let mut warnings = Vec::new();
    if censored == total {
        warnings.push("every trial was censored; the estimate is a pure lower bound".to_string());
    } else if censor_rate > CENSOR_WARNING_RATE {
        warnings.push(format!(
            "{:.1}% of trials were censored; increase max_steps",
            100.0 * censor_rate
        ));
    }
    DelayEstimate {
        mean,
        stderr,
        num_trials: values.len(),
        num_uncensored: total - censored,
        censor_rate,
        lower_bound: censored > 0,
        warnings,
    }
}

/// Mean time to false alarm from no-change records; censored runs count as their cap.
pub fn mtfa_from_records(records: &[StoppingRecord]) -> Result<DelayEstimate> {
    if records.is_empty() {
        return Err(Error::argument("no stopping records"));
    }
    let values: Vec<f64> = records.iter().map(|r| r.time as f64).collect();
    let censored = records.iter().filter(|r| r.censored).count();
    Ok(summarize(&values, censored, records.len()))
}

/// Mean of `tau - nu + 1` over runs with `tau >= nu`.
pub fn add_from_records(records: &[StoppingRecord], nu: u64) -> Result<DelayEstimate> {
    let eligible: Vec<&StoppingRecord> = records.iter().filter(|r| r.time >= nu).collect();
    if eligible.is_empty() {
        return Err(Error::Calibration(format!(
            "every trial alarmed before the change point {nu}"
        )));
    }
    let values: Vec<f64> = eligible.iter().map(|r| (r.time - nu + 1) as f64).collect();
    let censored = eligible.iter().filter(|r| r.censored).count();
    let mut estimate = summarize(&values, censored, eligible.len());
    let dropped = records.len() - eligible.len();
    if dropped > 0 {
        estimate
            .warnings
            .push(format!("{dropped} trials alarmed before the change point and were excluded"));
    }
    Ok(estimate)
}

pub fn estimate_mtfa(plan: &TrialPlan, workers: Option<usize>) -> Result<DelayEstimate> {
    if plan.nu.is_some() {
        return Err(Error::argument("MTFA estimation needs a plan without change point"));
    }
    mtfa_from_records(&run_trials(plan, workers)?)
}

pub fn estimate_add(plan: &TrialPlan, workers: Option<usize>) -> Result<DelayEstimate> {
    let nu = plan
        .nu
        .ok_or_else(|| Error::argument("delay estimation needs a finite change point"))?;
    add_from_records(&run_trials(plan, workers)?, nu)
}

/// Default censoring cap for MTFA runs: `50 e^b`, clamped to `[1000, 1e9]`.
pub fn default_mtfa_cap(threshold: f64) -> u64 {
    (50.0 * threshold.max(0.0).exp()).clamp(1_000.0, 1e9) as u64
}

/// Default censoring cap for delay runs: `100 g^{-1}(b)`, at least 1000.
pub fn default_delay_cap(model: &Model, threshold: f64) -> u64 {
    let curve = GrowthCurve::new(*model);
    match curve.growth_inverse(threshold.max(0.0)) {
        Ok(t) => (100.0 * t.ceil()).clamp(1_000.0, 1e9) as u64,
        Err(_) => 1_000_000,
    }
}

/// GLR part of an operating-characteristic template.
#[derive(Debug, Clone)]
pub struct GlrSetup {
    pub param_box: ParamBox,
    pub grid: ParamGrid,
    pub epsilon: f64,
}

/// Experiment template calibrated afresh for every alpha.
#[derive(Debug, Clone)]
pub struct OcTemplate {
    pub model: Model,
    pub detector: DetectorKind,
    /// Fixed window; `None` sizes it from the growth function.
    pub window: Option<u64>,
    pub safety: f64,
    pub glr: Option<GlrSetup>,
    pub nu: u64,
    pub num_trials: usize,
    /// `None` uses [`default_delay_cap`].
    pub max_steps: Option<u64>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OcRow {
    pub alpha: f64,
    pub threshold: f64,
    pub window: u64,
    pub delay: DelayEstimate,
}

impl OcTemplate {
    /// Threshold and window for one alpha.
    pub fn calibrate(&self, alpha: f64) -> Result<(f64, u64)> {
        let window = match self.window {
            Some(m) => m,
            None => calibration::window_size(&GrowthCurve::new(self.model), alpha, self.safety)?,
        };
        let threshold = match (self.detector, &self.glr) {
            (DetectorKind::WlGlr, Some(glr)) => calibration::glr_threshold(&GlrThresholdInputs {
                alpha,
                theta_volume: glr.param_box.volume(),
                dim: glr.param_box.dim(),
                epsilon: glr.epsilon,
            })?,
            (DetectorKind::WlGlr, None) => {
                return Err(Error::argument("wl-glr template needs a GLR setup"))
            }
            _ => calibration::cusum_threshold(alpha)?,
        };
        Ok((threshold, window))
    }

    pub fn plan(&self, alpha: f64) -> Result<TrialPlan> {
        let (threshold, window) = self.calibrate(alpha)?;
        Ok(TrialPlan {
            model: self.model,
            detector: self.detector,
            threshold,
            window,
            grid: self.glr.as_ref().map(|g| g.grid.clone()),
            nu: Some(self.nu),
            num_trials: self.num_trials,
            max_steps: self
                .max_steps
                .unwrap_or_else(|| default_delay_cap(&self.model, threshold)),
            seed: self.seed,
        })
    }
}

/// Delay versus alpha; every row reuses the template seed.
pub fn operating_characteristic(
    template: &OcTemplate,
    alphas: &[f64],
    workers: Option<usize>,
) -> Result<Vec<OcRow>> {
    if alphas.is_empty() {
        return Err(Error::argument("need at least one alpha"));
    }
    alphas
        .iter()
        .map(|&alpha| {
            let plan = template.plan(alpha)?;
            Ok(OcRow {
                alpha,
                threshold: plan.threshold,
                window: plan.window,
                delay: estimate_add(&plan, workers)?,
            })
        })
        .collect()
}

/// Comparison of stopping times with a fitted geometric law on `{1, 2, ...}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QqReport {
    pub sorted_times: Vec<u64>,
    pub p_hat: f64,
    /// `(theoretical, empirical)` quantiles at probabilities 0.01, ..., 0.99.
    pub pairs: Vec<(f64, f64)>,
    pub probabilities: Vec<f64>,
    pub correlation: f64,
}

/// Minimum sample size for [`geometric_qq`].
pub const QQ_MIN_SAMPLES: usize = 100;

pub fn geometric_qq(stopping_times: &[u64]) -> Result<QqReport> {
    if stopping_times.len() < QQ_MIN_SAMPLES {
        return Err(Error::argument(format!(
            "QQ analysis needs at least {QQ_MIN_SAMPLES} stopping times, got {}",
            stopping_times.len()
        )));
    }
    if stopping_times.contains(&0) {
        return Err(Error::argument("stopping times must be >= 1"));
    }
    let mut sorted = stopping_times.to_vec();
    sorted.sort_unstable();
    let n = sorted.len();
    let mean = sorted.iter().map(|&t| t as f64).sum::<f64>() / n as f64;
    let p_hat = 1.0 / mean;
    let probabilities: Vec<f64> = (1..=99).map(|i| i as f64 / 100.0).collect();
    let pairs: Vec<(f64, f64)> = probabilities
        .iter()
        .map(|&q| {
            let theoretical = if p_hat >= 1.0 {
                1.0
            } else {
                ((-q).ln_1p() / (-p_hat).ln_1p()).ceil().max(1.0)
            };
            let idx = ((q * n as f64).ceil() as usize).clamp(1, n) - 1;
            (theoretical, sorted[idx] as f64)
        })
        .collect();
    let correlation = pearson(&pairs).ok_or_else(|| {
        Error::argument("quantiles have zero variance; correlation is undefined")
    })?;
    Ok(QqReport {
        sorted_times: sorted,
        p_hat,
        pairs,
        probabilities,
        correlation,
    })
}

fn pearson(pairs: &[(f64, f64)]) -> Option<f64> {
    let n = pairs.len() as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in pairs {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx).powi(2);
        syy += (y - my).powi(2);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::GemParams;
    use rand_distr::{Distribution, Geometric};

    fn gem() -> Model {
        Model::Gem(GemParams::new(0.1, 1e4, 0.4).unwrap())
    }

    fn plan(threshold: f64, nu: Option<u64>) -> TrialPlan {
        TrialPlan {
            model: gem(),
            detector: DetectorKind::WlCusum,
            threshold,
            window: 25,
            grid: None,
            nu,
            num_trials: 200,
            max_steps: 10_000,
            seed: 11,
        }
    }

    #[test]
    fn nonpositive_threshold_alarms_at_once() {
        let m = estimate_mtfa(&plan(0.0, None), None).unwrap();
        assert_eq!((m.mean, m.stderr), (1.0, 0.0));
        let d = estimate_add(&plan(-1.0, Some(1)), None).unwrap();
        assert_eq!(d.mean, 1.0);
    }

    #[test]
    fn estimates_do_not_depend_on_workers() {
        let p = plan(3.0, None);
        let a = run_trials(&p, Some(1)).unwrap();
        let b = run_trials(&p, Some(3)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, run_trials(&p, None).unwrap());
    }

    #[test]
    fn wl_mtfa_dominates_full_history() {
        let mut p = plan(2.0, None);
        let wl = run_trials(&p, None).unwrap();
        p.detector = DetectorKind::FullCusum;
        let full = run_trials(&p, None).unwrap();
        assert!(wl.iter().zip(&full).all(|(w, f)| w.time >= f.time));
    }

    #[test]
    fn censoring_is_flagged() {
        let mut p = plan(50.0, None);
        p.max_steps = 20;
        p.num_trials = 10;
        let m = estimate_mtfa(&p, None).unwrap();
        assert!(m.lower_bound);
        assert_eq!(m.num_uncensored, 0);
        assert_eq!(m.mean, 20.0);
        assert!(!m.warnings.is_empty());
    }

    #[test]
    fn late_change_excludes_early_alarms() {
        let records = [
            StoppingRecord { time: 3, censored: false },
            StoppingRecord { time: 12, censored: false },
            StoppingRecord { time: 10, censored: false },
        ];
        let d = add_from_records(&records, 10).unwrap();
        assert_eq!(d.num_trials, 2);
        assert_eq!(d.mean, 2.0);
        assert_eq!(d.warnings.len(), 1);
    }

    #[test]
    fn qq_on_geometric_data() {
        for p in [0.002, 0.02, 0.2] {
            let geo = Geometric::new(p).unwrap();
            let mut rng = trial_rng(5, 0);
            let times: Vec<u64> = (0..2000).map(|_| geo.sample(&mut rng) + 1).collect();
            let r = geometric_qq(&times).unwrap();
            assert!(r.correlation >= 0.995, "p = {p}, corr = {}", r.correlation);
            assert!(r.pairs.windows(2).all(|w| w[0].0 <= w[1].0 && w[0].1 <= w[1].1));
        }
        assert!(geometric_qq(&[7; 500]).is_err());
        assert!(geometric_qq(&[3; 50]).is_err());
    }

    #[test]
    fn plan_validation() {
        let mut p = plan(1.0, None);
        p.num_trials = 0;
        assert!(run_trials(&p, None).is_err());
        let mut p = plan(1.0, Some(0));
        p.num_trials = 1;
        assert!(run_trials(&p, None).is_err());
        let mut p = plan(1.0, None);
        p.detector = DetectorKind::WlGlr;
        assert!(run_trials(&p, None).is_err());
        assert!(run_trials(&plan(1.0, None), Some(0)).is_err());
    }
}
