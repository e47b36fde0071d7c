// SPDX-License-Identifier: MIT OR Apache-2.0

//! Threshold and window selection.
//!
//! The CuSum threshold is `|ln alpha|`. The GLR threshold solves
//! `b - (eps d / 2) ln b = 1 + ln(|Theta| / C_d) + |ln alpha|` on its
//! increasing branch, and the window is `ceil(safety * g^{-1}(|ln alpha|))`.

use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::growth::{GrowthCurve, GrowthSource};

/// Default window safety factor.
pub const DEFAULT_SAFETY: f64 = 1.1;

/// Default slack in the GEM epsilon recipe.
pub const DEFAULT_GEM_DELTA: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GlrThresholdInputs {
    pub alpha: f64,
    /// Product of the parameter box side lengths.
    pub theta_volume: f64,
    pub dim: usize,
    pub epsilon: f64,
}

/// Threshold, window and a short audit trail of how they were chosen.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationResult {
    pub threshold: f64,
    pub window: u64,
    pub epsilon: Option<f64>,
    /// Absolute residual of the GLR threshold equation, when solved.
    pub residual: Option<f64>,
    pub notes: Vec<String>,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::argument(format!("alpha must lie in (0, 1), got {alpha}")))
    }
}

pub fn cusum_threshold(alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(-alpha.ln())
}

/// Volume of the unit ball in `d` dimensions, `pi^{d/2} / Gamma(1 + d/2)`.
pub fn unit_ball_volume(d: usize) -> f64 {
    let half = d as f64 / 2.0;
    (half * std::f64::consts::PI.ln() - ln_gamma(1.0 + half)).exp()
}

/// Right-hand side `K` and log coefficient `c` of `b - c ln b = K`.
fn glr_equation(inputs: &GlrThresholdInputs) -> Result<(f64, f64)> {
    let GlrThresholdInputs {
        alpha,
        theta_volume,
        dim,
        epsilon,
    } = *inputs;
    check_alpha(alpha)?;
    if dim == 0 {
        return Err(Error::argument("parameter dimension must be >= 1"));
    }
    if !(theta_volume > 0.0 && theta_volume.is_finite()) {
        return Err(Error::argument(format!(
            "parameter volume must be positive and finite, got {theta_volume}"
        )));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::argument(format!("epsilon must be positive, got {epsilon}")));
    }
    let c = epsilon * dim as f64 / 2.0;
    let k = 1.0 + (theta_volume / unit_ball_volume(dim)).ln() - alpha.ln();
    Ok((k, c))
}

/// Absolute residual of the GLR threshold equation at `b`.
pub fn glr_residual(inputs: &GlrThresholdInputs, b: f64) -> Result<f64> {
    let (k, c) = glr_equation(inputs)?;
    Ok((b - c * b.ln() - k).abs())
}

/// Largest root of the GLR threshold equation.
pub fn glr_threshold(inputs: &GlrThresholdInputs) -> Result<f64> {
    let (k, c) = glr_equation(inputs)?;
    let f = |b: f64| b - c * b.ln() - k;
    // f is convex with its minimum at b = c; the largest root lies above it.
    let mut lo = c;
    if f(lo) > 0.0 {
        return Err(Error::Calibration(format!(
            "threshold equation has no root (log coefficient {c:.4}, right-hand side {k:.4}); \
             use a smaller epsilon or alpha"
        )));
    }
    let mut hi = k.max(c) + 2.0 * c * (k + c).max(1.0).ln() + 10.0;
    while f(hi) <= 0.0 {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::Calibration("threshold search diverged".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let mut b = hi;
    // Polish on the increasing branch, where f' = 1 - c/b > 0.
    for _ in 0..3 {
        let d = 1.0 - c / b;
        if d <= 0.0 {
            break;
        }
        let next = b - f(b) / d;
        if next.is_finite() && next > c && f(next).abs() < f(b).abs() {
            b = next;
        }
    }
    if b <= 0.0 {
        return Err(Error::Calibration(format!(
            "threshold equation root {b} is not positive"
        )));
    }
    Ok(b)
}

/// `ceil(safety * g^{-1}(|ln alpha|))`, at least 1.
pub fn window_size<S: GrowthSource>(
    curve: &GrowthCurve<S>,
    alpha: f64,
    safety: f64,
) -> Result<u64> {
    check_alpha(alpha)?;
    if !(safety >= 1.0 && safety.is_finite()) {
        return Err(Error::argument(format!("safety factor must be >= 1, got {safety}")));
    }
    let t = curve.growth_inverse(-alpha.ln())?;
    Ok(((safety * t).ceil() as u64).max(1))
}

/// `(1 + delta) theta_max / theta_min` for geometric mean growth.
pub fn gem_epsilon(theta_min: f64, theta_max: f64, delta: f64) -> Result<f64> {
    if !(theta_min > 0.0 && theta_max >= theta_min && theta_max.is_finite()) {
        return Err(Error::argument(format!(
            "need 0 < theta_min <= theta_max, got ({theta_min}, {theta_max})"
        )));
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::argument(format!("delta must be positive, got {delta}")));
    }
    Ok((1.0 + delta) * theta_max / theta_min)
}

/// CuSum threshold plus growth-based window.
pub fn calibrate_cusum<S: GrowthSource>(
    curve: &GrowthCurve<S>,
    alpha: f64,
    safety: f64,
) -> Result<CalibrationResult> {
    let threshold = cusum_threshold(alpha)?;
    let window = window_size(curve, alpha, safety)?;
    Ok(CalibrationResult {
        threshold,
        window,
        epsilon: None,
        residual: None,
        notes: vec![
            format!("threshold = |ln alpha| = {threshold:.6}"),
            format!("window = ceil({safety} * g^-1({threshold:.6})) = {window}"),
        ],
    })
}

/// GLR threshold from the threshold equation with an explicit window.
pub fn calibrate_glr(inputs: &GlrThresholdInputs, window: u64) -> Result<CalibrationResult> {
    let threshold = glr_threshold(inputs)?;
    let residual = glr_residual(inputs, threshold)?;
    Ok(CalibrationResult {
        threshold,
        window: window.max(1),
        epsilon: Some(inputs.epsilon),
        residual: Some(residual),
        notes: vec![format!(
            "threshold solves b - ({} * {} / 2) ln b = 1 + ln(|Theta| / C_d) + |ln alpha| \
             with |Theta| = {}, C_d = {:.6}",
            inputs.epsilon,
            inputs.dim,
            inputs.theta_volume,
            unit_ball_volume(inputs.dim)
        )],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{DecayParams, GemParams, Model};
    use approx::assert_relative_eq;

    #[test]
    fn cusum_threshold_examples() {
        assert_relative_eq!(cusum_threshold(1.0 / std::f64::consts::E).unwrap(), 1.0);
        assert_relative_eq!(cusum_threshold(1e-3).unwrap(), 6.907755, epsilon = 1e-6);
        assert_relative_eq!(cusum_threshold(1e-2).unwrap(), 4.605170, epsilon = 1e-6);
        for bad in [0.0, 1.0, -0.5, f64::NAN] {
            assert!(cusum_threshold(bad).is_err());
        }
    }

    #[test]
    fn unit_ball_examples() {
        assert_relative_eq!(unit_ball_volume(1), 2.0, epsilon = 1e-12);
        assert_relative_eq!(unit_ball_volume(2), std::f64::consts::PI, epsilon = 1e-12);
        assert_relative_eq!(unit_ball_volume(3), 4.0 * std::f64::consts::PI / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn glr_threshold_examples() {
        let inputs = GlrThresholdInputs {
            alpha: 1e-3,
            theta_volume: 4.9 * 19.0 * 4.9,
            dim: 3,
            epsilon: 1.0,
        };
        let b = glr_threshold(&inputs).unwrap();
        assert!((b - 16.8).abs() < 0.05, "b = {b}");
        assert!(glr_residual(&inputs, b).unwrap() <= 1e-9);
        assert!(b > 1.5, "largest-root branch");

        let vanishing = GlrThresholdInputs {
            alpha: 1e-3,
            theta_volume: unit_ball_volume(2),
            dim: 2,
            epsilon: 1e-12,
        };
        assert_relative_eq!(glr_threshold(&vanishing).unwrap(), 1.0 - 1e-3f64.ln(), epsilon = 1e-9);

        for alpha in [1e-2, 1e-3, 1e-4] {
            let b = glr_threshold(&GlrThresholdInputs { alpha, ..inputs }).unwrap();
            assert!(b > cusum_threshold(alpha).unwrap());
        }
    }

    #[test]
    fn glr_threshold_without_root_is_reported() {
        let inputs = GlrThresholdInputs {
            alpha: 0.5,
            theta_volume: 1e-6,
            dim: 1,
            epsilon: 1.0,
        };
        assert!(matches!(glr_threshold(&inputs), Err(Error::Calibration(_))));
    }

    #[test]
    fn window_examples() {
        let gem = GrowthCurve::new(Model::Gem(GemParams::new(0.1, 1e4, 0.4).unwrap()));
        let m = window_size(&gem, 1e-3, DEFAULT_SAFETY).unwrap();
        assert!((1..=25).contains(&m), "m = {m}");
        assert!(window_size(&gem, 0.5, 1.0).unwrap() >= 1);

        let decay = GrowthCurve::new(Model::Decay(DecayParams::new(2.0, 4.0, 0.2).unwrap()));
        let t = decay.growth_inverse(-(1e-2f64).ln()).unwrap();
        assert_eq!(
            window_size(&decay, 1e-2, DEFAULT_SAFETY).unwrap(),
            (DEFAULT_SAFETY * t).ceil() as u64
        );
        assert!(window_size(&decay, 1e-2, 0.9).is_err());
    }

    #[test]
    fn gem_epsilon_examples() {
        assert_relative_eq!(gem_epsilon(0.3, 0.3, 1e-12).unwrap(), 1.0, epsilon = 1e-9);
        assert_relative_eq!(gem_epsilon(0.1, 0.5, 0.1).unwrap(), 5.5, epsilon = 1e-12);
        assert!(gem_epsilon(0.1, 0.5, 0.2).unwrap() > gem_epsilon(0.1, 0.5, 0.1).unwrap());
        assert!(gem_epsilon(0.0, 0.5, 0.1).is_err());
    }

    #[test]
    fn calibration_results_carry_notes() {
        let gem = GrowthCurve::new(Model::Gem(GemParams::new(0.1, 1e4, 0.4).unwrap()));
        let r = calibrate_cusum(&gem, 1e-3, DEFAULT_SAFETY).unwrap();
        assert!(r.threshold > 0.0 && r.window >= 1 && !r.notes.is_empty());
        let inputs = GlrThresholdInputs {
            alpha: 1e-3,
            theta_volume: 0.5,
            dim: 1,
            epsilon: 5.5,
        };
        let r = calibrate_glr(&inputs, 25).unwrap();
        assert!(r.residual.unwrap() <= 1e-9);
    }
}
