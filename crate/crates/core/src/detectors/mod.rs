// SPDX-License-Identifier: MIT OR Apache-2.0

//! Streaming change detectors.
//!
//! Every detector keeps the running log-likelihood-ratio sums
//! `lambda_{n,k} = sum_{i=k}^{n} Z_{i,k}` for its active hypothesized change
//! points `k` and reports `max(0, max_k lambda_{n,k})`; the constant 0 stands
//! for the empty hypothesis `k = n + 1`. The statistic cannot be updated
//! recursively once the post-change law depends on the lag, so each step
//! touches every active hypothesis.
//!
//! Detectors keep updating after an alarm; callers decide when to stop.

mod cusum;
mod glr;
mod sr;

pub use cusum::{FullCusum, WlCusum};
pub use glr::WlGlr;
pub use sr::ShiryaevRoberts;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::{AffineLlr, LlrModel};

/// One step of detector output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectorOutput {
    pub time: u64,
    pub statistic: f64,
    pub alarm: bool,
    /// Maximizing change point; `time + 1` when the empty hypothesis wins.
    pub k_star: u64,
    /// GLR only: maximizing grid parameter for `k_star`.
    pub theta_hat: Option<Vec<f64>>,
}

pub trait Detector {
    /// Consumes one observation. On a domain error the state is unchanged.
    fn step(&mut self, x: f64) -> Result<DetectorOutput>;

    fn threshold(&self) -> f64;

    /// Number of observations consumed so far.
    fn time(&self) -> u64;

    /// Returns to the pre-observation state.
    fn reset(&mut self);
}

/// Outcome of running a detector until it alarms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct StoppingRecord {
    /// Alarm time, or the number of observations consumed when censored.
    pub time: u64,
    pub censored: bool,
}

/// Feeds `stream` into `detector` until an alarm or `max_steps` observations.
///
/// Stream exhaustion before an alarm yields a censored record.
pub fn run_until_alarm<D, I>(detector: &mut D, stream: I, max_steps: u64) -> Result<StoppingRecord>
where
    D: Detector + ?Sized,
    I: IntoIterator<Item = f64>,
{
    if max_steps == 0 {
        return Err(Error::argument("max_steps must be >= 1"));
    }
    let mut stream = stream.into_iter();
    while detector.time() < max_steps {
        let Some(x) = stream.next() else { break };
        let out = detector.step(x)?;
        if out.alarm {
            return Ok(StoppingRecord {
                time: out.time,
                censored: false,
            });
        }
    }
    Ok(StoppingRecord {
        time: detector.time(),
        censored: true,
    })
}

/// Coefficient lookup that caches by lag for lag-invariant models.
#[derive(Debug, Clone)]
pub(crate) struct CoefficientCache {
    by_lag: Vec<AffineLlr>,
    lag_invariant: bool,
}

impl CoefficientCache {
    pub(crate) fn new<M: LlrModel>(model: &M) -> Self {
        Self {
            by_lag: Vec::new(),
            lag_invariant: model.lag_invariant(),
        }
    }

    #[inline]
    pub(crate) fn get<M: LlrModel>(&mut self, model: &M, n: u64, k: u64) -> AffineLlr {
        if !self.lag_invariant {
            return model.coefficients(n, k);
        }
        let lag = (n - k) as usize;
        while self.by_lag.len() <= lag {
            let l = self.by_lag.len() as u64;
            // Any (n, k) with the right lag will do.
            self.by_lag.push(model.coefficients(l + 1, 1));
        }
        self.by_lag[lag]
    }
}

/// Picks `(value, k)` maximizing over ascending hypotheses; ties go to the
/// smallest `k`, and the empty hypothesis (value 0, `k = time + 1`) wins only
/// when every sum is negative.
#[inline]
pub(crate) fn select_max(time: u64, sums: impl Iterator<Item = (u64, f64)>) -> (f64, u64) {
    let mut best = (f64::NEG_INFINITY, time + 1);
    for (k, value) in sums {
        if value > best.0 {
            best = (value, k);
        }
    }
    if best.0 >= 0.0 {
        best
    } else {
        (0.0, time + 1)
    }
}
