// SPDX-License-Identifier: MIT OR Apache-2.0

use std::collections::VecDeque;

use super::{Detector, DetectorOutput};
use crate::error::{Error, Result};
use crate::grid::ParamGrid;
use crate::models::{AffineLlr, LlrModel, Model};

/// Window-limited GLR-CuSum over a finite post-change parameter grid.
///
/// The statistic is `max(0, max_{k, theta} lambda_{n,k}(theta))` with `k`
/// ranging over the last `m + 1` change points. Affine coefficients for every
/// `(lag, theta)` pair are tabulated up front, so a step costs
/// `O((m + 1) |grid|)` multiply-adds.
#[derive(Debug, Clone)]
pub struct WlGlr {
    base: Model,
    grid: ParamGrid,
    threshold: f64,
    window: u64,
    /// Row-major `[lag][grid point]`.
    slopes: Vec<f64>,
    intercepts: Vec<f64>,
    time: u64,
    first_k: u64,
    sums: VecDeque<Vec<f64>>,
    spare: Vec<Vec<f64>>,
}

impl WlGlr {
    /// Every grid point must be a valid post-change parameter for `base`.
    pub fn new(base: Model, grid: ParamGrid, threshold: f64, window: u64) -> Result<Self> {
        if grid.is_empty() {
            return Err(Error::argument("GLR grid is empty"));
        }
        if grid.dim() != base.post_param_dim() {
            return Err(Error::argument(format!(
                "grid dimension {} does not match {} parameter dimension {}",
                grid.dim(),
                base.name(),
                base.post_param_dim()
            )));
        }
        let models = grid
            .points()
            .iter()
            .map(|p| base.with_post_param(p))
            .collect::<Result<Vec<_>>>()?;
        let g = models.len();
        let rows = usize::try_from(window)
            .ok()
            .and_then(|w| w.checked_add(1))
            .filter(|r| r.checked_mul(g).is_some_and(|c| c <= 1 << 31))
            .ok_or_else(|| Error::argument(format!("GLR window {window} too large")))?;
        let mut slopes = Vec::with_capacity(rows * g);
        let mut intercepts = Vec::with_capacity(rows * g);
        for lag in 0..rows as u64 {
            for m in &models {
                let c = m.lag_coefficients(lag);
                slopes.push(c.slope);
                intercepts.push(c.intercept);
            }
        }
        Ok(Self {
            base,
            grid,
            threshold,
            window,
            slopes,
            intercepts,
            time: 0,
            first_k: 1,
            sums: VecDeque::new(),
            spare: Vec::new(),
        })
    }

    pub fn grid(&self) -> &ParamGrid {
        &self.grid
    }

    pub fn window(&self) -> u64 {
        self.window
    }

    /// Active `(k, lambda_{n,k}(theta_j))` rows in increasing `k`.
    pub fn hypotheses(&self) -> impl Iterator<Item = (u64, &[f64])> + '_ {
        let first = self.first_k;
        self.sums
            .iter()
            .enumerate()
            .map(move |(i, s)| (first + i as u64, s.as_slice()))
    }
}

impl Detector for WlGlr {
    fn step(&mut self, x: f64) -> Result<DetectorOutput> {
        let t = self.base.transform(x)?;
        self.time += 1;
        let n = self.time;
        let g = self.grid.len();
        while self.first_k < n.saturating_sub(self.window) && !self.sums.is_empty() {
            let row = self.sums.pop_front().expect("non-empty");
            self.spare.push(row);
            self.first_k += 1;
        }
        if self.sums.is_empty() {
            self.first_k = n;
        }
        let mut fresh = self.spare.pop().unwrap_or_default();
        fresh.clear();
        fresh.resize(g, 0.0);
        self.sums.push_back(fresh);

        let mut best = (f64::NEG_INFINITY, n + 1, 0usize);
        for (i, row) in self.sums.iter_mut().enumerate() {
            let k = self.first_k + i as u64;
            let base = (n - k) as usize * g;
            let slopes = &self.slopes[base..base + g];
            let intercepts = &self.intercepts[base..base + g];
            if t.is_finite() {
                for ((s, a), b) in row.iter_mut().zip(slopes).zip(intercepts) {
                    *s += a * t + b;
                }
            } else {
                for ((s, &slope), &intercept) in row.iter_mut().zip(slopes).zip(intercepts) {
                    *s += AffineLlr { slope, intercept }.eval(t);
                }
            }
            for (j, &s) in row.iter().enumerate() {
                if s > best.0 {
                    best = (s, k, j);
                }
            }
        }
        let (statistic, k_star, theta_hat) = if best.0 >= 0.0 {
            (best.0, best.1, Some(self.grid.points()[best.2].clone()))
        } else {
            (0.0, n + 1, None)
        };
        Ok(DetectorOutput {
            time: n,
            statistic,
            alarm: statistic >= self.threshold,
            k_star,
            theta_hat,
        })
    }

    fn threshold(&self) -> f64 {
        self.threshold
    }

    fn time(&self) -> u64 {
        self.time
    }

    fn reset(&mut self) {
        self.time = 0;
        self.first_k = 1;
        self.spare.extend(self.sums.drain(..));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detectors::WlCusum;
    use crate::grid::ParamBox;
    use crate::models::{BetaWaveParams, GemParams};

    fn gem(theta: f64) -> Model {
        Model::Gem(GemParams::new(0.5, 1.0, theta).unwrap())
    }

    #[test]
    fn single_point_grid_matches_cusum() {
        let grid = ParamGrid::from_points(vec![vec![0.3]]).unwrap();
        let mut glr = WlGlr::new(gem(0.1), grid, 4.0, 6).unwrap();
        let mut cusum = WlCusum::new(gem(0.3), 4.0, 6);
        for i in 0..25 {
            let x = (i as f64 * 0.7).sin() * 2.0 + 0.1 * i as f64;
            let a = glr.step(x).unwrap();
            let b = cusum.step(x).unwrap();
            assert!((a.statistic - b.statistic).abs() < 1e-9 * (1.0 + b.statistic.abs()));
            assert_eq!(a.k_star, b.k_star);
            assert_eq!(a.alarm, b.alarm);
        }
    }

    #[test]
    fn statistic_is_max_over_grid_cusums() {
        let pb = ParamBox::new(vec![(0.0, 0.5)]).unwrap();
        let grid = ParamGrid::uniform(&pb, &[7]).unwrap();
        let mut glr = WlGlr::new(gem(0.1), grid.clone(), f64::INFINITY, 4).unwrap();
        let mut cusums: Vec<_> = grid
            .points()
            .iter()
            .map(|p| WlCusum::new(gem(p[0]), f64::INFINITY, 4))
            .collect();
        for i in 0..30 {
            let x = ((i * 37 % 11) as f64 - 4.0) * 0.6;
            let out = glr.step(x).unwrap();
            let best = cusums
                .iter_mut()
                .map(|c| c.step(x).unwrap().statistic)
                .fold(0.0f64, f64::max);
            assert!((out.statistic - best).abs() < 1e-9 * (1.0 + best));
            if out.statistic > 0.0 {
                let th = out.theta_hat.unwrap();
                assert!(grid.points().contains(&th));
            }
        }
    }

    #[test]
    fn rejects_mismatched_or_invalid_grid() {
        let grid2 = ParamGrid::from_points(vec![vec![0.1, 0.2]]).unwrap();
        assert!(WlGlr::new(gem(0.1), grid2, 1.0, 3).is_err());
        let base = Model::BetaWave(BetaWaveParams::new(2.0, 30.0, [0.0, 2.0, 1.0]).unwrap());
        let bad = ParamGrid::from_points(vec![vec![0.0, 1.0, -1.0]]).unwrap();
        assert!(WlGlr::new(base, bad, 1.0, 3).is_err());
    }

    #[test]
    fn beta_zero_observation_is_finite_when_slope_vanishes() {
        let base = Model::BetaWave(BetaWaveParams::new(2.0, 30.0, [0.0, 2.0, 1.0]).unwrap());
        let grid = ParamGrid::from_points(vec![vec![0.5, 3.0, 1.0]]).unwrap();
        let mut glr = WlGlr::new(base, grid, 10.0, 2).unwrap();
        let out = glr.step(0.0).unwrap();
        assert!(out.statistic.is_finite());
        assert!(glr.step(-0.1).is_err());
        assert_eq!(glr.time(), 1);
    }
}
