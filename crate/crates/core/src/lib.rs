// SPDX-License-Identifier: MIT OR Apache-2.0

//! Quickest change detection for independent observations whose post-change
//! distribution drifts with time since the change.
//!
//! The crate provides window-limited CuSum and GLR-CuSum detectors, growth
//! function utilities used for window sizing, threshold calibration, a
//! reproducible Monte-Carlo harness, and an epidemic-wave monitoring pipeline.

#![forbid(unsafe_code)]

pub mod error;
pub mod calibration;
pub mod detectors;
pub mod epidata;
pub mod grid;
pub mod growth;
pub mod models;
pub mod montecarlo;
pub mod quadrature;
pub mod rng;

pub use error::{Error, Result};
pub use models::{
    AffineLlr, BetaWaveParams, DecayParams, GemParams, Law, LlrModel, Model, Moments,
};
