// SPDX-License-Identifier: MIT OR Apache-2.0

use std::collections::VecDeque;

use super::{select_max, CoefficientCache, Detector, DetectorOutput};
use crate::error::Result;
use crate::models::LlrModel;

/// Hypothesis sums shared by the windowed and full-history CuSum.
#[derive(Debug, Clone)]
struct CusumCore<M> {
    model: M,
    threshold: f64,
    /// `None` keeps every hypothesis.
    window: Option<u64>,
    time: u64,
    first_k: u64,
    sums: VecDeque<f64>,
    cache: CoefficientCache,
}

impl<M: LlrModel> CusumCore<M> {
    fn new(model: M, threshold: f64, window: Option<u64>) -> Self {
        let cache = CoefficientCache::new(&model);
        Self {
            model,
            threshold,
            window,
            time: 0,
            first_k: 1,
            sums: VecDeque::new(),
            cache,
        }
    }

    fn step(&mut self, x: f64) -> Result<DetectorOutput> {
        let t = self.model.transform(x)?;
        self.time += 1;
        let n = self.time;
        if let Some(m) = self.window {
            while self.first_k < n.saturating_sub(m) && !self.sums.is_empty() {
                self.sums.pop_front();
                self.first_k += 1;
            }
            if self.sums.is_empty() {
                self.first_k = n;
            }
        }
        self.sums.push_back(0.0);
        for (i, sum) in self.sums.iter_mut().enumerate() {
            let k = self.first_k + i as u64;
            *sum += self.cache.get(&self.model, n, k).eval(t);
        }
        let (statistic, k_star) = select_max(n, self.hypotheses());
        Ok(DetectorOutput {
            time: n,
            statistic,
            alarm: statistic >= self.threshold,
            k_star,
            theta_hat: None,
        })
    }

    fn hypotheses(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        let first = self.first_k;
        self.sums
            .iter()
            .enumerate()
            .map(move |(i, &s)| (first + i as u64, s))
    }

    fn reset(&mut self) {
        self.time = 0;
        self.first_k = 1;
        self.sums.clear();
    }
}

macro_rules! cusum_detector {
    ($name:ident) => {
        impl<M: LlrModel> $name<M> {
            /// Active `(k, lambda_{n,k})` pairs in increasing `k`.
            pub fn hypotheses(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
                self.core.hypotheses()
            }

            pub fn model(&self) -> &M {
                &self.core.model
            }
        }

        impl<M: LlrModel> Detector for $name<M> {
            fn step(&mut self, x: f64) -> Result<DetectorOutput> {
                self.core.step(x)
            }

            fn threshold(&self) -> f64 {
                self.core.threshold
            }

            fn time(&self) -> u64 {
                self.core.time
            }

            fn reset(&mut self) {
                self.core.reset()
            }
        }
    };
}

/// Window-limited CuSum: hypotheses `k` in `{max(1, n - m), ..., n}`.
///
/// At most `m + 1` sums are kept, so a step costs `O(m)`.
#[derive(Debug, Clone)]
pub struct WlCusum<M> {
    core: CusumCore<M>,
}

impl<M: LlrModel> WlCusum<M> {
    pub fn new(model: M, threshold: f64, window: u64) -> Self {
        Self {
            core: CusumCore::new(model, threshold, Some(window)),
        }
    }

    pub fn window(&self) -> u64 {
        self.core.window.unwrap_or(u64::MAX)
    }
}

cusum_detector!(WlCusum);

/// Full-history CuSum over every `k` in `{1, ..., n}`; `O(n)` per step.
#[derive(Debug, Clone)]
pub struct FullCusum<M> {
    core: CusumCore<M>,
}

impl<M: LlrModel> FullCusum<M> {
    pub fn new(model: M, threshold: f64) -> Self {
        Self {
            core: CusumCore::new(model, threshold, None),
        }
    }
}

cusum_detector!(FullCusum);

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detectors::run_until_alarm;
    use crate::models::{AffineLlr, GemParams, Model};
    use crate::Error;

    fn gem_unit() -> Model {
        Model::Gem(GemParams::new(1.0, 1.0, 1.0).unwrap())
    }

    /// Stationary Gaussian mean shift N(0,1) -> N(1,1); Z = x - 1/2 at every lag.
    struct MeanShift;

    impl LlrModel for MeanShift {
        fn transform(&self, x: f64) -> Result<f64> {
            Ok(x)
        }
        fn coefficients(&self, _n: u64, _k: u64) -> AffineLlr {
            AffineLlr {
                slope: 1.0,
                intercept: -0.5,
            }
        }
    }

    #[test]
    fn backward_moving_maximizer() {
        let mut det = WlCusum::new(gem_unit(), f64::INFINITY, 3);
        let outs: Vec<_> = [1.0, 0.0, 10.0]
            .into_iter()
            .map(|x| det.step(x).unwrap())
            .collect();
        assert_eq!(outs[1].k_star, 2);
        assert_eq!(outs[2].k_star, 1);
        let e = std::f64::consts::E;
        let lambda_31 = -(e * e - 1.0) / 2.0 + (e * e - 1.0) * 10.0 - (e.powi(4) - 1.0) / 2.0;
        assert!((outs[2].statistic - lambda_31).abs() < 1e-9);
    }

    #[test]
    fn first_step_empty_hypothesis() {
        let m = Model::Gem(GemParams::new(0.1, 10_000.0, 0.4).unwrap());
        let mut det = WlCusum::new(m, 1.0, 5);
        let out = det.step(-50.0).unwrap();
        assert_eq!(out.statistic, 0.0);
        assert!(!out.alarm);
    }

    #[test]
    fn zero_window_uses_current_observation_only() {
        let m = Model::Gem(GemParams::new(1.0, 1.0, 0.5).unwrap());
        let mut det = WlCusum::new(MeanShift, 10.0, 0);
        let mut gem_det = WlCusum::new(m, 10.0, 0);
        for (n, x) in [0.3, 2.0, -1.0, 4.0].into_iter().enumerate() {
            assert_eq!(det.step(x).unwrap().statistic, (x - 0.5).max(0.0));
            let z = m.log_likelihood_ratio(x, n as u64 + 1, n as u64 + 1).unwrap();
            assert_eq!(gem_det.step(x).unwrap().statistic, z.max(0.0));
            assert_eq!(det.hypotheses().count(), 1);
        }
    }

    #[test]
    fn window_bounds_active_hypotheses() {
        let mut det = WlCusum::new(gem_unit(), f64::INFINITY, 4);
        for n in 1..=20u64 {
            det.step(0.1 * n as f64).unwrap();
            let ks: Vec<u64> = det.hypotheses().map(|(k, _)| k).collect();
            assert!(ks.len() <= 5);
            assert_eq!(ks[0], n.saturating_sub(4).max(1));
            assert_eq!(*ks.last().unwrap(), n);
        }
    }

    #[test]
    fn full_history_reduces_to_page_for_stationary_model() {
        let xs = [0.2, 1.7, -0.4, 2.2, 0.9, -1.5, 3.0, 0.0];
        let mut det = FullCusum::new(MeanShift, f64::INFINITY);
        let mut page = 0.0f64;
        for x in xs {
            page = (page + x - 0.5).max(0.0);
            assert!((det.step(x).unwrap().statistic - page).abs() < 1e-12);
        }
    }

    #[test]
    fn domain_error_leaves_state_unchanged() {
        let m = Model::BetaWave(
            crate::models::BetaWaveParams::new(2.0, 50.0, [0.5, 3.0, 1.0]).unwrap(),
        );
        let mut det = WlCusum::new(m, 5.0, 3);
        det.step(0.05).unwrap();
        let before: Vec<_> = det.hypotheses().collect();
        assert!(matches!(det.step(1.2), Err(Error::Domain { .. })));
        assert_eq!(det.time(), 1);
        assert_eq!(det.hypotheses().collect::<Vec<_>>(), before);
    }

    #[test]
    fn nonpositive_threshold_stops_immediately() {
        let mut det = WlCusum::new(gem_unit(), 0.0, 3);
        let rec = run_until_alarm(&mut det, [5.0, 1.0], 10).unwrap();
        assert_eq!(rec.time, 1);
        assert!(!rec.censored);
        let mut det = WlCusum::new(gem_unit(), 1e9, 3);
        let rec = run_until_alarm(&mut det, [0.0; 4], 10).unwrap();
        assert_eq!((rec.time, rec.censored), (4, true));
        assert!(run_until_alarm(&mut det, [0.0], 0).is_err());
    }

    #[test]
    fn reset_restarts() {
        let mut det = FullCusum::new(gem_unit(), 2.0);
        let first = det.step(3.0).unwrap();
        det.step(1.0).unwrap();
        det.reset();
        assert_eq!(det.step(3.0).unwrap(), first);
    }
}
