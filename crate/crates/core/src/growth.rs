// SPDX-License-Identifier: MIT OR Apache-2.0

//! Growth functions `g(n)` (cumulative post-change KL), their continuous
//! inverse, and finite-grid diagnostics for the admissibility condition
//! `log g^{-1}(x) = o(x)` and the variance / time-shift sufficient conditions.
//!
//! All implemented models are lag-invariant, so a single curve serves every
//! change point.

use std::sync::Mutex;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::Model;

const DEFAULT_MAX_KNOTS: usize = 5_000_000;

/// Per-lag increments of a growth curve.
pub trait GrowthSource: Send + Sync {
    /// `E[Z_{nu+lag, nu}]`.
    fn increment(&self, lag: u64) -> f64;

    /// Last lag for which increments are known to be increasing, when the
    /// curve is only meaningful on a prefix.
    fn increasing_prefix(&self) -> Option<u64> {
        None
    }
}

impl GrowthSource for Model {
    fn increment(&self, lag: u64) -> f64 {
        self.expected_llr(lag)
    }

    fn increasing_prefix(&self) -> Option<u64> {
        match self {
            Model::BetaWave(p) => Some(p.theta[1].floor() as u64),
            _ => None,
        }
    }
}

/// Cumulative KL curve with a lazily extended cache of integer knots.
#[derive(Debug)]
pub struct GrowthCurve<S> {
    source: S,
    knots: Mutex<Vec<f64>>,
    max_knots: usize,
}

impl<S: GrowthSource> GrowthCurve<S> {
    pub fn new(source: S) -> Self {
        Self::with_max_knots(source, DEFAULT_MAX_KNOTS)
    }

    pub fn with_max_knots(source: S, max_knots: usize) -> Self {
        Self {
            source,
            knots: Mutex::new(vec![0.0]),
            max_knots: max_knots.max(2),
        }
    }

    pub fn source(&self) -> &S {
        &self.source
    }

    fn extend_to(&self, knots: &mut Vec<f64>, n: usize) {
        while knots.len() <= n {
            let lag = (knots.len() - 1) as u64;
            let next = knots.last().copied().unwrap_or(0.0) + self.source.increment(lag);
            knots.push(next);
        }
    }

    /// `g(n)`, the sum of the first `n` increments.
    pub fn growth(&self, n: u64) -> f64 {
        let mut knots = self.knots.lock().expect("growth cache poisoned");
        self.extend_to(&mut knots, n as usize);
        knots[n as usize]
    }

    /// Piecewise-linear interpolation of `g` at real `t >= 0`.
    pub fn growth_at(&self, t: f64) -> f64 {
        let t = t.max(0.0);
        let lower = t.floor();
        let frac = t - lower;
        let g0 = self.growth(lower as u64);
        if frac == 0.0 {
            return g0;
        }
        let g1 = self.growth(lower as u64 + 1);
        g0 + frac * (g1 - g0)
    }

    /// Continuous inverse of the interpolated curve.
    ///
    /// Returns the smallest `t` with `g(t) >= x`, except on flat stretches
    /// where `g(t) == x` on an interval; there the right end is returned.
    /// At integer knots where `g` is strictly increasing the inverse is exact.
    pub fn growth_inverse(&self, x: f64) -> Result<f64> {
        if !(x >= 0.0) || !x.is_finite() {
            return Err(Error::argument(format!(
                "growth inverse requires finite x >= 0; got {x}"
            )));
        }
        let mut knots = self.knots.lock().expect("growth cache poisoned");
        while *knots.last().unwrap() <= x {
            if knots.len() >= self.max_knots {
                return Err(Error::GrowthSaturated {
                    target: x,
                    knots: knots.len(),
                });
            }
            let target = (knots.len() * 2).min(self.max_knots) - 1;
            self.extend_to(&mut knots, target);
        }
        let upper = knots.partition_point(|&g| g <= x);
        let lower = upper - 1;
        if let Some(prefix) = self.source.increasing_prefix() {
            if upper as u64 > prefix + 1 {
                log::warn!(
                    "growth inverse at {x} uses lag {upper} beyond the increasing prefix (lag <= {prefix})"
                );
            }
        }
        let (g0, g1) = (knots[lower], knots[upper]);
        Ok(lower as f64 + (x - g0) / (g1 - g0))
    }
}

/// Trend diagnostic for `log g^{-1}(x) / x -> 0`.
#[derive(Debug, Clone, Serialize)]
pub struct GrowthConditionReport {
    pub grid: Vec<f64>,
    /// `log g^{-1}(x) / x`; `None` where the inverse could not be evaluated.
    pub ratios: Vec<Option<f64>>,
    /// Ratio strictly decreased across every grid point of the top decade.
    pub decreasing_top_decade: bool,
}

/// Evaluates `log g^{-1}(x) / x` on a log-spaced grid over `[1, x_max]`
/// (ten points per decade).
pub fn check_growth_condition<S: GrowthSource>(
    curve: &GrowthCurve<S>,
    x_max: f64,
) -> Result<GrowthConditionReport> {
    if !(x_max > 1.0) || !x_max.is_finite() {
        return Err(Error::argument(format!(
            "x_max must be finite and > 1; got {x_max}"
        )));
    }
    let steps = (10.0 * x_max.log10()).ceil().max(1.0) as usize;
    let grid: Vec<f64> = (0..=steps)
        .map(|i| x_max.powf(i as f64 / steps as f64))
        .collect();
    let ratios: Vec<Option<f64>> = grid
        .iter()
        .map(|&x| match curve.growth_inverse(x) {
            Ok(t) if t > 0.0 => Some(t.ln() / x),
            _ => None,
        })
        .collect();
    let top: Vec<Option<f64>> = grid
        .iter()
        .zip(&ratios)
        .filter(|(&x, _)| x >= x_max / 10.0 * (1.0 - 1e-12))
        .map(|(_, r)| *r)
        .collect();
    let decreasing_top_decade = top.len() >= 2
        && top.windows(2).all(|w| match (w[0], w[1]) {
            (Some(a), Some(b)) => b < a,
            _ => false,
        });
    Ok(GrowthConditionReport {
        grid,
        ratios,
        decreasing_top_decade,
    })
}

/// Finite-horizon evidence for the variance and time-shift sufficient conditions.
#[derive(Debug, Clone, Serialize)]
pub struct VarianceReport {
    pub n: Vec<u64>,
    /// `sum_{lag < n} Var[Z] / g(n)^2`; infinite where `g(n) = 0`.
    pub variance_ratio: Vec<f64>,
    /// `min E_{post(L + d)}[Z_L] - E_{post(L)}[Z_L]` over `L < n_max`, `1 <= d < n_max`.
    pub time_shift_min: f64,
    /// `(L, d)` attaining the minimum.
    pub time_shift_argmin: (u64, u64),
}

pub fn variance_diagnostics(model: &Model, n_max: u64) -> Result<VarianceReport> {
    if n_max < 2 {
        return Err(Error::argument(format!("n_max must be >= 2; got {n_max}")));
    }
    let moments: Vec<_> = (0..n_max).map(|lag| model.llr_moments(lag, lag)).collect();
    let mut n = Vec::new();
    let mut variance_ratio = Vec::new();
    let (mut g, mut var_sum) = (moments[0].mean, moments[0].var);
    for (len, m) in (2..=n_max).zip(&moments[1..]) {
        g += m.mean;
        var_sum += m.var;
        n.push(len);
        variance_ratio.push(if g > 0.0 { var_sum / (g * g) } else { f64::INFINITY });
    }

    let mut time_shift_min = f64::INFINITY;
    let mut time_shift_argmin = (0, 1);
    for lag in 0..n_max {
        let base = moments[lag as usize].mean;
        for shift in 1..n_max {
            let diff = model.llr_moments(lag, lag + shift).mean - base;
            if diff < time_shift_min {
                time_shift_min = diff;
                time_shift_argmin = (lag, shift);
            }
        }
    }
    Ok(VarianceReport {
        n,
        variance_ratio,
        time_shift_min,
        time_shift_argmin,
    })
}
