// SPDX-License-Identifier: MIT OR Apache-2.0

//! Epidemic monitoring: case ingestion, smoothing into population fractions,
//! Beta pre-change fitting, wave-shape fitting and WL-GLR monitoring.

use std::io::Read;
use std::path::Path;

use chrono::NaiveDate;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::calibration::{glr_threshold, GlrThresholdInputs};
use crate::detectors::{Detector, DetectorOutput, WlGlr};
use crate::error::{Error, Result};
use crate::grid::{ParamBox, ParamGrid};
use crate::models::{wave_multiplier, BetaWaveParams, Model};
use crate::rng::trial_rng;

/// Daily new cases for one region.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseSeries {
    pub region: String,
    pub population: u64,
    pub dates: Vec<NaiveDate>,
    pub daily: Vec<f64>,
}

impl CaseSeries {
    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn daily_fractions(&self) -> Vec<f64> {
        let pop = self.population as f64;
        self.daily.iter().map(|c| c / pop).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvOptions {
    pub population: u64,
    /// Counts are running totals and get differenced.
    pub cumulative: bool,
    pub region: String,
}

#[derive(Debug, Deserialize)]
struct CaseRow {
    date: String,
    cases: String,
}

/// Reads a `date,cases` CSV with ISO-8601 dates.
pub fn load_case_csv(path: impl AsRef<Path>, options: &CsvOptions) -> Result<CaseSeries> {
    let file = std::fs::File::open(path.as_ref())?;
    parse_case_csv(file, options)
}

pub fn parse_case_csv<R: Read>(reader: R, options: &CsvOptions) -> Result<CaseSeries> {
    if options.population == 0 {
        return Err(Error::argument("population must be positive"));
    }
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut dates = Vec::new();
    let mut counts = Vec::new();
    let mut bad_lines = Vec::new();
    for result in rdr.deserialize::<CaseRow>() {
        let line = match &result {
            Ok(_) => None,
            Err(e) => e.position().map(|p| p.line() as usize),
        };
        let row = match result {
            Ok(row) => row,
            Err(e) => {
                match line {
                    Some(l) => bad_lines.push(l),
                    None => return Err(e.into()),
                }
                continue;
            }
        };
        let line_no = dates.len() + bad_lines.len() + 2;
        let date = NaiveDate::parse_from_str(&row.date, "%Y-%m-%d");
        let cases = row.cases.parse::<f64>();
        match (date, cases) {
            (Ok(d), Ok(c)) if c.is_finite() && c >= 0.0 => {
                dates.push((d, line_no));
                counts.push(c);
            }
            _ => bad_lines.push(line_no),
        }
    }
    if !bad_lines.is_empty() {
        return Err(Error::Data {
            reason: "malformed rows".into(),
            lines: bad_lines,
        });
    }
    if dates.is_empty() {
        return Err(Error::Data {
            reason: "no data rows".into(),
            lines: vec![],
        });
    }
    let unordered: Vec<usize> = dates
        .windows(2)
        .filter(|w| w[1].0 <= w[0].0)
        .map(|w| w[1].1)
        .collect();
    if !unordered.is_empty() {
        return Err(Error::Data {
            reason: "dates are not strictly increasing".into(),
            lines: unordered,
        });
    }
    let daily = if options.cumulative {
        let mut prev = 0.0;
        let mut clamped = 0usize;
        let daily = counts
            .iter()
            .map(|&c| {
                let d = c - prev;
                prev = c;
                if d < 0.0 {
                    clamped += 1;
                    0.0
                } else {
                    d
                }
            })
            .collect();
        if clamped > 0 {
            log::warn!("{clamped} negative daily differences clamped to zero");
        }
        daily
    } else {
        counts
    };
    Ok(CaseSeries {
        region: options.region.clone(),
        population: options.population,
        dates: dates.into_iter().map(|(d, _)| d).collect(),
        daily,
    })
}

/// Smoothed daily new cases as population fractions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FractionSeries {
    pub dates: Vec<NaiveDate>,
    pub values: Vec<f64>,
}

impl FractionSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Index of the first date `>= date`.
    pub fn position(&self, date: NaiveDate) -> Option<usize> {
        let i = self.dates.partition_point(|d| *d < date);
        (i < self.dates.len()).then_some(i)
    }

    pub fn slice(&self, start: usize, end: usize) -> FractionSeries {
        FractionSeries {
            dates: self.dates[start..end].to_vec(),
            values: self.values[start..end].to_vec(),
        }
    }

    /// Replaces exact zeros by half the smallest positive value.
    pub fn clamp_zeros(&self) -> Result<FractionSeries> {
        let floor = self
            .values
            .iter()
            .copied()
            .filter(|&v| v > 0.0)
            .fold(f64::INFINITY, f64::min);
        if !floor.is_finite() {
            return Err(Error::Data {
                reason: "series has no positive values".into(),
                lines: vec![],
            });
        }
        Ok(FractionSeries {
            dates: self.dates.clone(),
            values: self
                .values
                .iter()
                .map(|&v| if v == 0.0 { floor / 2.0 } else { v })
                .collect(),
        })
    }
}

/// Trailing `window`-day moving average divided by population.
pub fn to_fraction_series(series: &CaseSeries, window: usize) -> Result<FractionSeries> {
    if window == 0 {
        return Err(Error::argument("smoothing window must be >= 1"));
    }
    if series.len() < window {
        return Err(Error::argument(format!(
            "series has {} days, fewer than the smoothing window {window}",
            series.len()
        )));
    }
    let fractions = series.daily_fractions();
    let values: Vec<f64> = fractions
        .windows(window)
        .map(|w| w.iter().sum::<f64>() / window as f64)
        .collect();
    if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::Data {
            reason: "daily cases exceed the population".into(),
            lines: vec![],
        });
    }
    Ok(FractionSeries {
        dates: series.dates[window - 1..].to_vec(),
        values,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BetaFit {
    pub a0: f64,
    pub b0: f64,
    pub start_date: Option<NaiveDate>,
    pub length: usize,
}

/// Method-of-moments Beta fit on the last `window_days` observations.
pub fn fit_beta_prechange(series: &FractionSeries, window_days: usize) -> Result<BetaFit> {
    if window_days < 2 || series.len() < window_days {
        return Err(Error::argument(format!(
            "need at least {} observations and a window of at least 2 days, got {}",
            window_days,
            series.len()
        )));
    }
    let start = series.len() - window_days;
    let xs = &series.values[start..];
    if let Some(i) = xs.iter().position(|&x| !(x > 0.0 && x < 1.0)) {
        return Err(Error::Domain {
            x: xs[i],
            support: "(0, 1)",
        });
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let constant = xs.iter().all(|&x| x == xs[0]);
    if constant || var <= 0.0 {
        return Err(Error::Fit("pre-change observations have zero variance".into()));
    }
    let c = mean * (1.0 - mean) / var - 1.0;
    if c <= 0.0 {
        return Err(Error::Fit(format!(
            "sample variance {var:e} too large for a Beta law with mean {mean:e}"
        )));
    }
    Ok(BetaFit {
        a0: mean * c,
        b0: (1.0 - mean) * c,
        start_date: series.dates.get(start).copied(),
        length: window_days,
    })
}

/// `h_theta(lag) = 1 + (10^theta0 / theta2) exp(-(lag - theta1)^2 / (2 theta2^2))`.
pub fn h_function(theta: &[f64; 3], lag: f64) -> Result<f64> {
    if !(theta[2] > 0.0) {
        return Err(Error::argument(format!("theta2 must be positive, got {}", theta[2])));
    }
    Ok(wave_multiplier(theta, lag))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveFitOptions {
    pub restarts: usize,
    /// Convergence once every step is below `tolerance` times its box width.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub seed: u64,
}

impl Default for WaveFitOptions {
    fn default() -> Self {
        Self {
            restarts: 20,
            tolerance: 1e-8,
            max_iterations: 10_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WaveFit {
    pub theta: [f64; 3],
    /// Mean squared distance between observations and fitted Beta means.
    pub residual: f64,
    pub converged_restarts: usize,
}

/// Mean squared error of the wave mean curve against `values` at lags 0, 1, ...
pub fn wave_residual(values: &[f64], beta: &BetaFit, theta: &[f64; 3]) -> f64 {
    let sse: f64 = values
        .iter()
        .enumerate()
        .map(|(lag, &x)| {
            let a = beta.a0 * wave_multiplier(theta, lag as f64);
            (x - a / (a + beta.b0)).powi(2)
        })
        .sum();
    sse / values.len() as f64
}

/// Fits the wave shape to a series starting at the onset, by multi-start
/// compass search over `theta_box`.
pub fn fit_wave_shape(
    series: &FractionSeries,
    beta: &BetaFit,
    theta_box: &ParamBox,
    options: &WaveFitOptions,
) -> Result<WaveFit> {
    if series.is_empty() {
        return Err(Error::argument("cannot fit a wave to an empty series"));
    }
    if theta_box.dim() != 3 || theta_box.bounds[2].0 <= 0.0 && theta_box.bounds[2].1 <= 0.0 {
        return Err(Error::argument("wave box must be three-dimensional with theta2 > 0"));
    }
    if options.restarts == 0 {
        return Err(Error::argument("need at least one restart"));
    }
    let mut bounds = theta_box.bounds.clone();
    // theta2 = 0 is a degenerate wave.
    bounds[2].0 = bounds[2].0.max(f64::MIN_POSITIVE.sqrt());
    let objective = |th: &[f64; 3]| wave_residual(&series.values, beta, th);
    let mut rng = trial_rng(options.seed, 0);
    let mut best: Option<([f64; 3], f64)> = None;
    let mut converged = 0usize;
    for restart in 0..options.restarts {
        let start: [f64; 3] = std::array::from_fn(|i| {
            let (lo, hi) = bounds[i];
            if restart == 0 {
                0.5 * (lo + hi)
            } else {
                rng.random_range(lo..hi)
            }
        });
        let (theta, value, ok) = compass_search(&objective, start, &bounds, options);
        converged += ok as usize;
        if best.is_none_or(|(_, v)| value < v) {
            best = Some((theta, value));
        }
    }
    let (theta, residual) = best.expect("at least one restart");
    if converged == 0 {
        return Err(Error::Fit(format!(
            "wave fit did not converge in {} restarts; best so far theta = {:?}, residual = {:e}",
            options.restarts, theta, residual
        )));
    }
    Ok(WaveFit {
        theta,
        residual,
        converged_restarts: converged,
    })
}

fn compass_search<F: Fn(&[f64; 3]) -> f64>(
    f: &F,
    mut x: [f64; 3],
    bounds: &[(f64, f64)],
    options: &WaveFitOptions,
) -> ([f64; 3], f64, bool) {
    let widths: [f64; 3] = std::array::from_fn(|i| bounds[i].1 - bounds[i].0);
    let mut step: [f64; 3] = std::array::from_fn(|i| 0.25 * widths[i]);
    let mut fx = f(&x);
    for _ in 0..options.max_iterations {
        if (0..3).all(|i| step[i] <= options.tolerance * widths[i]) {
            return (x, fx, true);
        }
        let mut improved = false;
        for i in 0..3 {
            for dir in [1.0, -1.0] {
                let mut y = x;
                y[i] = (x[i] + dir * step[i]).clamp(bounds[i].0, bounds[i].1);
                if y[i] == x[i] {
                    continue;
                }
                let fy = f(&y);
                if fy < fx {
                    x = y;
                    fx = fy;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            for s in &mut step {
                *s *= 0.5;
            }
        }
    }
    (x, fx, false)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonitorConfig {
    pub theta_box: ParamBox,
    /// Grid points per axis.
    pub grid_counts: Vec<usize>,
    pub alpha: f64,
    pub window: u64,
    pub epsilon: f64,
    /// Replaces the threshold-equation value when set.
    pub threshold: Option<f64>,
}

impl MonitorConfig {
    pub fn threshold(&self) -> Result<f64> {
        match self.threshold {
            Some(b) => Ok(b),
            None => glr_threshold(&GlrThresholdInputs {
                alpha: self.alpha,
                theta_volume: self.theta_box.volume(),
                dim: self.theta_box.dim(),
                epsilon: self.epsilon,
            }),
        }
    }

    /// GLR detector with pre-change law `Beta(a0, b0)`.
    pub fn detector(&self, beta: &BetaFit) -> Result<WlGlr> {
        if self.theta_box.dim() != 3 {
            return Err(Error::argument("wave parameter box must be three-dimensional"));
        }
        let grid = ParamGrid::uniform(&self.theta_box, &self.grid_counts)?;
        let center: [f64; 3] = std::array::from_fn(|i| {
            let (lo, hi) = self.theta_box.bounds[i];
            0.5 * (lo + hi)
        });
        let base = Model::BetaWave(BetaWaveParams::new(beta.a0, beta.b0, center)?);
        WlGlr::new(base, grid, self.threshold()?, self.window)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonitorPoint {
    pub date: NaiveDate,
    pub output: DetectorOutput,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonitorResult {
    pub threshold: f64,
    pub trajectory: Vec<MonitorPoint>,
    pub first_crossing: Option<NaiveDate>,
}

/// Runs the WL-GLR over `series` and records every step.
pub fn monitor(series: &FractionSeries, beta: &BetaFit, config: &MonitorConfig) -> Result<MonitorResult> {
    let outside: Vec<usize> = series
        .values
        .iter()
        .enumerate()
        .filter(|(_, &x)| !(x > 0.0 && x < 1.0))
        .map(|(i, _)| i)
        .collect();
    if !outside.is_empty() {
        return Err(Error::Data {
            reason: "observations outside (0, 1); clamp zeros first".into(),
            lines: outside,
        });
    }
    let mut detector = config.detector(beta)?;
    let mut trajectory = Vec::with_capacity(series.len());
    let mut first_crossing = None;
    for (&date, &x) in series.dates.iter().zip(&series.values) {
        let output = detector.step(x)?;
        if output.alarm && first_crossing.is_none() {
            first_crossing = Some(date);
        }
        trajectory.push(MonitorPoint { date, output });
    }
    Ok(MonitorResult {
        threshold: detector.threshold(),
        trajectory,
        first_crossing,
    })
}

/// Writes `date,statistic,threshold,alarm,k_star,theta0,theta1,theta2`.
pub fn write_trajectory_csv<W: std::io::Write>(writer: W, result: &MonitorResult) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["date", "statistic", "threshold", "alarm", "k_star", "theta0", "theta1", "theta2"])?;
    for p in &result.trajectory {
        let theta: [String; 3] = std::array::from_fn(|i| {
            p.output
                .theta_hat
                .as_ref()
                .and_then(|t| t.get(i))
                .map(|v| v.to_string())
                .unwrap_or_default()
        });
        w.write_record([
            p.date.to_string(),
            p.output.statistic.to_string(),
            result.threshold.to_string(),
            p.output.alarm.to_string(),
            p.output.k_star.to_string(),
            theta[0].clone(),
            theta[1].clone(),
            theta[2].clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use crate::models::Law;

    fn opts(cumulative: bool, population: u64) -> CsvOptions {
        CsvOptions {
            population,
            cumulative,
            region: "test".into(),
        }
    }

    fn dates(n: usize) -> Vec<NaiveDate> {
        let d0 = NaiveDate::from_ymd_opt(2020, 3, 1).unwrap();
        (0..n).map(|i| d0 + chrono::Days::new(i as u64)).collect()
    }

    #[test]
    fn parses_daily_and_cumulative() {
        let csv = "date,cases\n2020-03-01,10\n2020-03-02,20\n2020-03-03,30\n";
        let s = parse_case_csv(csv.as_bytes(), &opts(false, 1000)).unwrap();
        assert_eq!(s.daily_fractions(), vec![0.01, 0.02, 0.03]);
        let csv = "date,cases\n2020-03-01,10\n2020-03-02,30\n2020-03-03,60\n2020-03-04,55\n";
        let s = parse_case_csv(csv.as_bytes(), &opts(true, 1000)).unwrap();
        assert_eq!(s.daily, vec![10.0, 20.0, 30.0, 0.0]);
    }

    #[test]
    fn rejects_bad_files() {
        assert!(parse_case_csv("".as_bytes(), &opts(false, 10)).is_err());
        assert!(parse_case_csv("date,cases\n".as_bytes(), &opts(false, 10)).is_err());
        let csv = "date,cases\n2020-03-01,10\n2020-03-02,x\n2020-13-03,5\n2020-03-04,-1\n";
        match parse_case_csv(csv.as_bytes(), &opts(false, 100)) {
            Err(Error::Data { lines, .. }) => assert_eq!(lines, vec![3, 4, 5]),
            other => panic!("unexpected {other:?}"),
        }
        let csv = "date,cases\n2020-03-02,1\n2020-03-01,2\n";
        match parse_case_csv(csv.as_bytes(), &opts(false, 100)) {
            Err(Error::Data { lines, .. }) => assert_eq!(lines, vec![3]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn smoothing_examples() {
        let series = CaseSeries {
            region: "r".into(),
            population: 10_000,
            dates: dates(4),
            daily: vec![10.0, 20.0, 30.0, 40.0],
        };
        let f = to_fraction_series(&series, 4).unwrap();
        assert_eq!(f.values.len(), 1);
        assert_relative_eq!(f.values[0], 0.0025, epsilon = 1e-15);
        assert_eq!(f.dates[0], series.dates[3]);
        assert_eq!(to_fraction_series(&series, 1).unwrap().values, series.daily_fractions());
        assert!(to_fraction_series(&series, 5).is_err());
        let flat = CaseSeries {
            daily: vec![7.0; 4],
            ..series
        };
        assert!(to_fraction_series(&flat, 2).unwrap().values.iter().all(|&v| (v - 7e-4).abs() < 1e-16));
    }

    #[test]
    fn beta_fit_recovers_shapes_and_moments() {
        let law = Law::Beta { a: 20.6, b: 2.94e5 };
        let mut rng = trial_rng(3, 0);
        let values: Vec<f64> = (0..2000).map(|_| law.sample(&mut rng)).collect();
        let series = FractionSeries {
            dates: dates(values.len()),
            values: values.clone(),
        };
        let fit = fit_beta_prechange(&series, 2000).unwrap();
        assert!((fit.a0 / 20.6 - 1.0).abs() < 0.15, "a0 = {}", fit.a0);

        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let s = fit.a0 + fit.b0;
        assert_relative_eq!(fit.a0 / s, mean, max_relative = 1e-12);
        assert_relative_eq!(fit.a0 * fit.b0 / (s * s * (s + 1.0)), var, max_relative = 1e-12);
    }

    #[test]
    fn beta_fit_degenerate_and_symmetric() {
        let flat = FractionSeries {
            dates: dates(20),
            values: vec![0.01; 20],
        };
        assert!(matches!(fit_beta_prechange(&flat, 20), Err(Error::Fit(_))));
        let sym = FractionSeries {
            dates: dates(4),
            values: vec![0.4, 0.6, 0.45, 0.55],
        };
        let fit = fit_beta_prechange(&sym, 4).unwrap();
        assert_relative_eq!(fit.a0, fit.b0, max_relative = 1e-12);
        assert!(fit_beta_prechange(&sym, 5).is_err());
    }

    #[test]
    fn h_function_examples() {
        let th = [0.464, 3.894, 0.445];
        let peak = 1.0 + 10f64.powf(0.464) / 0.445;
        assert_relative_eq!(h_function(&th, 3.894).unwrap(), peak, epsilon = 1e-12);
        assert!((peak - 7.544).abs() < 5e-3);
        assert_relative_eq!(h_function(&th, 1e6).unwrap(), 1.0);
        assert!(h_function(&[0.1, 1.0, 0.0], 1.0).is_err());
        assert!((0..50).all(|l| h_function(&th, l as f64 * 0.37).unwrap() >= 1.0));
    }

    fn beta_ref() -> BetaFit {
        BetaFit {
            a0: 20.6,
            b0: 2.94e5,
            start_date: None,
            length: 20,
        }
    }

    fn fig5_box() -> ParamBox {
        ParamBox::new(vec![(0.1, 5.0), (1.0, 20.0), (0.1, 5.0)]).unwrap()
    }

    #[test]
    fn wave_fit_recovers_noiseless_curve() {
        let beta = beta_ref();
        let truth = [0.464, 3.894, 0.445];
        let values: Vec<f64> = (0..30)
            .map(|lag| {
                let a = beta.a0 * wave_multiplier(&truth, lag as f64);
                a / (a + beta.b0)
            })
            .collect();
        let series = FractionSeries {
            dates: dates(values.len()),
            values,
        };
        let fit = fit_wave_shape(&series, &beta, &fig5_box(), &WaveFitOptions::default()).unwrap();
        for i in 0..3 {
            assert!(
                (fit.theta[i] / truth[i] - 1.0).abs() < 0.05,
                "theta = {:?}",
                fit.theta
            );
        }
    }

    #[test]
    fn wave_fit_without_wave_shrinks_amplitude() {
        let beta = beta_ref();
        let mean = beta.a0 / (beta.a0 + beta.b0);
        let series = FractionSeries {
            dates: dates(40),
            values: vec![mean; 40],
        };
        let fit = fit_wave_shape(&series, &beta, &fig5_box(), &WaveFitOptions::default()).unwrap();
        assert!(fit.residual < 1e-6 * mean * mean);
        assert_relative_eq!(fit.theta[0], 0.1, epsilon = 1e-6);

        let few = WaveFitOptions {
            restarts: 2,
            ..Default::default()
        };
        let a = fit_wave_shape(&series, &beta, &fig5_box(), &few).unwrap();
        assert!(fit.residual <= a.residual);
    }

    #[test]
    fn monitor_trivial_threshold_and_domain() {
        let beta = beta_ref();
        let cfg = MonitorConfig {
            theta_box: fig5_box(),
            grid_counts: vec![3, 3, 3],
            alpha: 1e-3,
            window: 5,
            epsilon: 1.0,
            threshold: Some(0.0),
        };
        let series = FractionSeries {
            dates: dates(3),
            values: vec![7e-5, 7e-5, 7e-5],
        };
        let r = monitor(&series, &beta, &cfg).unwrap();
        assert_eq!(r.first_crossing, Some(series.dates[0]));
        let bad = FractionSeries {
            dates: dates(2),
            values: vec![7e-5, 0.0],
        };
        assert!(matches!(monitor(&bad, &beta, &cfg), Err(Error::Data { .. })));
        let clamped = bad.clamp_zeros().unwrap();
        assert_eq!(clamped.values[1], 3.5e-5);

        let mut out = Vec::new();
        write_trajectory_csv(&mut out, &r).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("date,statistic,threshold,alarm,k_star,theta0,theta1,theta2\n"));
        assert_eq!(text.lines().count(), 4);
    }

    #[test]
    fn monitor_threshold_from_equation() {
        let cfg = MonitorConfig {
            theta_box: ParamBox::new(vec![(0.1, 5.0), (1.0, 20.0), (0.1, 5.0)]).unwrap(),
            grid_counts: vec![2, 2, 2],
            alpha: 1e-3,
            window: 20,
            epsilon: 1.0,
            threshold: None,
        };
        assert!((cfg.threshold().unwrap() - 16.83).abs() < 0.01);
    }
}
