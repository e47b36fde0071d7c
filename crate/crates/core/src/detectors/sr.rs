// SPDX-License-Identifier: MIT OR Apache-2.0

use super::CoefficientCache;
use crate::error::Result;
use crate::models::LlrModel;

/// Shiryaev-Roberts statistic `R_n = sum_{k=1}^{n} exp(lambda_{n,k})`, `R_0 = 0`.
///
/// Sums are kept in the log domain; `R_n` itself may overflow to infinity
/// while [`ShiryaevRoberts::log_statistic`] stays finite.
#[derive(Debug, Clone)]
pub struct ShiryaevRoberts<M> {
    model: M,
    time: u64,
    log_terms: Vec<f64>,
    cache: CoefficientCache,
}

impl<M: LlrModel> ShiryaevRoberts<M> {
    pub fn new(model: M) -> Self {
        let cache = CoefficientCache::new(&model);
        Self {
            model,
            time: 0,
            log_terms: Vec::new(),
            cache,
        }
    }

    pub fn time(&self) -> u64 {
        self.time
    }

    /// Consumes one observation and returns `R_n`.
    pub fn step(&mut self, x: f64) -> Result<f64> {
        let t = self.model.transform(x)?;
        self.time += 1;
        let n = self.time;
        self.log_terms.push(0.0);
        for (i, term) in self.log_terms.iter_mut().enumerate() {
            *term += self.cache.get(&self.model, n, i as u64 + 1).eval(t);
        }
        Ok(self.log_statistic().exp())
    }

    /// `ln R_n`; negative infinity before the first observation.
    pub fn log_statistic(&self) -> f64 {
        let max = self
            .log_terms
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return max;
        }
        max + self
            .log_terms
            .iter()
            .map(|&v| (v - max).exp())
            .sum::<f64>()
            .ln()
    }

    pub fn reset(&mut self) {
        self.time = 0;
        self.log_terms.clear();
    }
}
