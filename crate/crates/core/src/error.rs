// SPDX-License-Identifier: MIT OR Apache-2.0

use thiserror::Error;

/// Errors raised by the detection library.
#[derive(Debug, Error)]
pub enum Error {
    /// An observation fell outside the support of the pre-change density.
    #[error("observation {x} is outside the model support ({support})")]
    Domain { x: f64, support: &'static str },

    /// A caller-supplied argument violated an operation precondition.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// Threshold or window selection failed.
    #[error("calibration failed: {0}")]
    Calibration(String),

    /// A model fit (Beta moments, wave shape) did not produce valid parameters.
    #[error("fit failed: {0}")]
    Fit(String),

    /// A growth curve could not be inverted within the cache limit.
    #[error("growth curve saturated below {target} after {knots} knots")]
    GrowthSaturated { target: f64, knots: usize },

    /// Malformed input data; `lines` lists the offending 1-based line numbers.
    #[error("malformed input ({reason}) at lines {lines:?}")]
    Data { reason: String, lines: Vec<usize> },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn argument(msg: impl Into<String>) -> Self {
        Self::Argument(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
