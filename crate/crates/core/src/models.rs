// SPDX-License-Identifier: MIT OR Apache-2.0

//! Pre/post-change observation models.
//!
//! Every implemented post-change law depends on the hypothesized change point
//! only through the lag `n - k`, and every log-likelihood ratio is affine in a
//! scalar statistic of the observation (`x` for the Gaussian models, `ln x`
//! for the Beta model). Detectors exploit both facts through [`LlrModel`].

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::quadrature;

const LN_2PI: f64 = 1.837_877_066_409_345_5;
const QUAD_TOL: f64 = 1e-10;

/// `Z = slope * t(x) + intercept` where `t` is the model's observation transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineLlr {
    pub slope: f64,
    pub intercept: f64,
}

impl AffineLlr {
    pub const ZERO: Self = Self {
        slope: 0.0,
        intercept: 0.0,
    };

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        // t may be -inf for a Beta observation at 0; a zero slope must not turn that into NaN.
        if self.slope == 0.0 {
            self.intercept
        } else {
            self.slope.mul_add(t, self.intercept)
        }
    }
}

/// Log-likelihood-ratio interface consumed by the detectors.
pub trait LlrModel: Send + Sync {
    /// Validates `x` against the pre-change support and maps it to the
    /// statistic the LLR is affine in.
    fn transform(&self, x: f64) -> Result<f64>;

    /// Coefficients of `Z_{n,k}`; callers guarantee `n >= k >= 1`.
    fn coefficients(&self, n: u64, k: u64) -> AffineLlr;

    /// True when `coefficients(n, k)` depends on `n - k` only, which lets
    /// detectors cache coefficients by lag.
    fn lag_invariant(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GemParams {
    pub mu0: f64,
    pub sigma0_sq: f64,
    pub theta: f64,
}

impl GemParams {
    pub fn new(mu0: f64, sigma0_sq: f64, theta: f64) -> Result<Self> {
        positive("mu0", mu0)?;
        positive("sigma0_sq", sigma0_sq)?;
        positive("theta", theta)?;
        Ok(Self {
            mu0,
            sigma0_sq,
            theta,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayParams {
    pub mu1: f64,
    pub sigma_sq: f64,
    pub theta: f64,
}

impl DecayParams {
    pub fn new(mu1: f64, sigma_sq: f64, theta: f64) -> Result<Self> {
        positive("mu1", mu1)?;
        positive("sigma_sq", sigma_sq)?;
        if !(theta > 0.0 && theta < 0.5) {
            return Err(Error::argument(format!(
                "decay theta must lie in (0, 0.5); got {theta}"
            )));
        }
        Ok(Self {
            mu1,
            sigma_sq,
            theta,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaWaveParams {
    pub a0: f64,
    pub b0: f64,
    pub theta: [f64; 3],
}

impl BetaWaveParams {
    pub fn new(a0: f64, b0: f64, theta: [f64; 3]) -> Result<Self> {
        positive("a0", a0)?;
        positive("b0", b0)?;
        if !(theta[0] >= 0.0 && theta[1] >= 0.0 && theta[0].is_finite() && theta[1].is_finite())
        {
            return Err(Error::argument(format!(
                "wave parameters theta0, theta1 must be finite and >= 0; got {theta:?}"
            )));
        }
        positive("theta2", theta[2])?;
        Ok(Self { a0, b0, theta })
    }

    /// Post-change Beta shape `a0 * h_theta(lag)`.
    pub fn post_shape(&self, lag: f64) -> f64 {
        self.a0 * wave_multiplier(&self.theta, lag)
    }
}

/// `h_theta(x) = 1 + (10^theta0 / theta2) * exp(-(x - theta1)^2 / (2 theta2^2))`.
///
/// Unchecked variant; `theta2` must be positive.
#[inline]
pub fn wave_multiplier(theta: &[f64; 3], lag: f64) -> f64 {
    let z = (lag - theta[1]) / theta[2];
    1.0 + 10f64.powf(theta[0]) / theta[2] * (-0.5 * z * z).exp()
}

fn positive(name: &str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::argument(format!(
            "{name} must be finite and > 0; got {value}"
        )))
    }
}

/// A fully specified univariate law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Law {
    Normal { mean: f64, var: f64 },
    Beta { a: f64, b: f64 },
}

impl Law {
    pub fn log_density(&self, x: f64) -> Result<f64> {
        match *self {
            Law::Normal { mean, var } => {
                check_real(x)?;
                let d = x - mean;
                Ok(-0.5 * (LN_2PI + var.ln()) - d * d / (2.0 * var))
            }
            Law::Beta { a, b } => {
                check_unit(x)?;
                let log_x = if a == 1.0 { 0.0 } else { (a - 1.0) * x.ln() };
                let log_1mx = if b == 1.0 {
                    0.0
                } else {
                    (b - 1.0) * (-x).ln_1p()
                };
                Ok(log_x + log_1mx - ln_beta(a, b))
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Law::Normal { mean, var } => {
                let z: f64 = StandardNormal.sample(rng);
                var.sqrt().mul_add(z, mean)
            }
            Law::Beta { a, b } => rand_distr::Beta::new(a, b)
                .expect("validated Beta shapes")
                .sample(rng),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Law::Normal { mean, .. } => mean,
            Law::Beta { a, b } => a / (a + b),
        }
    }
}

fn check_real(x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain {
            x,
            support: "finite reals",
        })
    }
}

fn check_unit(x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::Domain {
            x,
            support: "[0, 1]",
        })
    }
}

pub(crate) fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Mean and variance of a log-likelihood ratio under some law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Moments {
    pub mean: f64,
    pub var: f64,
}

/// Uniform handle over the implemented observation models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum Model {
    /// Gaussian with exponentially growing post-change mean `mu0 e^{theta (n - nu)}`.
    Gem(GemParams),
    /// Zero-mean Gaussian whose post-change mean `mu1 (n - nu + 1)^{-theta}` decays.
    Decay(DecayParams),
    /// Beta pre-change law with a Gaussian-bump wave in the first shape.
    BetaWave(BetaWaveParams),
}

impl Model {
    pub fn name(&self) -> &'static str {
        match self {
            Model::Gem(_) => "gem",
            Model::Decay(_) => "decay",
            Model::BetaWave(_) => "beta-wave",
        }
    }

    pub fn pre_law(&self) -> Law {
        match *self {
            Model::Gem(p) => Law::Normal {
                mean: p.mu0,
                var: p.sigma0_sq,
            },
            Model::Decay(p) => Law::Normal {
                mean: 0.0,
                var: p.sigma_sq,
            },
            Model::BetaWave(p) => Law::Beta { a: p.a0, b: p.b0 },
        }
    }

    /// Law of an observation `lag` steps after the change point.
    pub fn post_law(&self, lag: u64) -> Law {
        let lag = lag as f64;
        match *self {
            Model::Gem(p) => Law::Normal {
                mean: p.mu0 * (p.theta * lag).exp(),
                var: p.sigma0_sq,
            },
            Model::Decay(p) => Law::Normal {
                mean: p.mu1 * (lag + 1.0).powf(-p.theta),
                var: p.sigma_sq,
            },
            Model::BetaWave(p) => Law::Beta {
                a: p.post_shape(lag),
                b: p.b0,
            },
        }
    }

    /// LLR coefficients at a given lag.
    pub fn lag_coefficients(&self, lag: u64) -> AffineLlr {
        let lag = lag as f64;
        match *self {
            Model::Gem(p) => {
                // shift = mu0 (e^{theta lag} - 1); intercept = -(mu1^2 - mu0^2) / 2 sigma^2
                let shift = p.mu0 * (p.theta * lag).exp_m1();
                AffineLlr {
                    slope: shift / p.sigma0_sq,
                    intercept: -shift * (2.0 * p.mu0 + shift) / (2.0 * p.sigma0_sq),
                }
            }
            Model::Decay(p) => {
                let mean = p.mu1 * (lag + 1.0).powf(-p.theta);
                AffineLlr {
                    slope: mean / p.sigma_sq,
                    intercept: -mean * mean / (2.0 * p.sigma_sq),
                }
            }
            Model::BetaWave(p) => {
                let a1 = p.post_shape(lag);
                if a1 == p.a0 {
                    return AffineLlr::ZERO;
                }
                AffineLlr {
                    slope: a1 - p.a0,
                    intercept: ln_beta(p.a0, p.b0) - ln_beta(a1, p.b0),
                }
            }
        }
    }

    pub fn log_pre_density(&self, x: f64) -> Result<f64> {
        self.pre_law().log_density(x)
    }

    /// `log p_{1,n,k}(x)`.
    pub fn log_post_density(&self, x: f64, n: u64, k: u64) -> Result<f64> {
        let lag = checked_lag(n, k)?;
        self.post_law(lag).log_density(x)
    }

    /// `Z_{n,k}(x) = log p_{1,n,k}(x) / p_0(x)`.
    pub fn log_likelihood_ratio(&self, x: f64, n: u64, k: u64) -> Result<f64> {
        let lag = checked_lag(n, k)?;
        let t = self.transform(x)?;
        Ok(self.lag_coefficients(lag).eval(t))
    }

    pub fn sample_pre<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.pre_law().sample(rng)
    }

    /// Draws `X_n` when the change happened at `nu`.
    pub fn sample_post<R: Rng + ?Sized>(&self, rng: &mut R, n: u64, nu: u64) -> Result<f64> {
        let lag = checked_lag(n, nu)?;
        Ok(self.post_law(lag).sample(rng))
    }

    /// `E[Z_{nu+lag, nu}]` under the true post-change law at that lag.
    pub fn expected_llr(&self, lag: u64) -> f64 {
        match *self {
            Model::BetaWave(p) => beta_shape_kl(p.post_shape(lag as f64), p.a0, p.b0),
            _ => self.llr_moments(lag, lag).mean,
        }
    }

    /// Moments of the LLR hypothesizing lag `hyp_lag` when the observation
    /// is actually drawn `true_lag` steps after the change.
    pub fn llr_moments(&self, hyp_lag: u64, true_lag: u64) -> Moments {
        let coef = self.lag_coefficients(hyp_lag);
        match self.post_law(true_lag) {
            Law::Normal { mean, var } => Moments {
                mean: coef.slope.mul_add(mean, coef.intercept),
                var: coef.slope * coef.slope * var,
            },
            Law::Beta { a, b } => {
                if coef.slope == 0.0 {
                    return Moments {
                        mean: coef.intercept,
                        var: 0.0,
                    };
                }
                let log_moments = beta_log_moments(a, b);
                Moments {
                    mean: coef.slope.mul_add(log_moments.mean, coef.intercept),
                    var: coef.slope * coef.slope * log_moments.var,
                }
            }
        }
    }

    /// Dimension of the post-change parameter used by GLR grids.
    pub fn post_param_dim(&self) -> usize {
        match self {
            Model::Gem(_) | Model::Decay(_) => 1,
            Model::BetaWave(_) => 3,
        }
    }

    pub fn post_param(&self) -> Vec<f64> {
        match self {
            Model::Gem(p) => vec![p.theta],
            Model::Decay(p) => vec![p.theta],
            Model::BetaWave(p) => p.theta.to_vec(),
        }
    }

    /// Same pre-change law, post-change parameter replaced by `theta`.
    pub fn with_post_param(&self, theta: &[f64]) -> Result<Model> {
        if theta.len() != self.post_param_dim() {
            return Err(Error::argument(format!(
                "{} expects a {}-dimensional post-change parameter; got {}",
                self.name(),
                self.post_param_dim(),
                theta.len()
            )));
        }
        Ok(match *self {
            Model::Gem(p) => Model::Gem(GemParams::new(p.mu0, p.sigma0_sq, theta[0])?),
            Model::Decay(p) => Model::Decay(DecayParams::new(p.mu1, p.sigma_sq, theta[0])?),
            Model::BetaWave(p) => {
                Model::BetaWave(BetaWaveParams::new(p.a0, p.b0, [theta[0], theta[1], theta[2]])?)
            }
        })
    }
}

impl LlrModel for Model {
    fn transform(&self, x: f64) -> Result<f64> {
        match self {
            Model::Gem(_) | Model::Decay(_) => {
                check_real(x)?;
                Ok(x)
            }
            Model::BetaWave(_) => {
                check_unit(x)?;
                Ok(x.ln())
            }
        }
    }

    fn coefficients(&self, n: u64, k: u64) -> AffineLlr {
        self.lag_coefficients(n - k)
    }

    fn lag_invariant(&self) -> bool {
        true
    }
}

fn checked_lag(n: u64, k: u64) -> Result<u64> {
    if k == 0 || n < k {
        return Err(Error::argument(format!(
            "require n >= k >= 1; got n = {n}, k = {k}"
        )));
    }
    Ok(n - k)
}

/// Quadrature over `y = ln x` for a Beta law.
///
/// In `y` the density `exp(a y + (b - 1) ln(1 - e^y) - ln B(a, b))` is smooth
/// and unimodal even when the Beta law is concentrated near zero (b ~ 1e5).
struct LogBetaQuadrature {
    a: f64,
    b: f64,
    log_norm: f64,
    mode: f64,
    breaks: Vec<f64>,
}

impl LogBetaQuadrature {
    fn new(a: f64, b: f64) -> Self {
        // Mode and curvature scale of the log-density in y.
        let (mode, scale) = if b > 1.0 {
            let p = a / (a + b - 1.0);
            (p.ln(), ((b - 1.0) / (a * (a + b - 1.0))).sqrt())
        } else {
            (-1.0 / a, 1.0 / a)
        };
        let lo = mode - 40.0 * scale - 45.0 / a;
        let mut breaks = vec![lo];
        for j in -10..=10 {
            let y = mode + f64::from(j) * scale;
            if y > *breaks.last().unwrap() && y < 0.0 {
                breaks.push(y);
            }
        }
        breaks.push(0.0);
        Self {
            a,
            b,
            log_norm: ln_beta(a, b),
            mode,
            breaks,
        }
    }

    fn log_density_with(&self, a: f64, log_norm: f64, y: f64) -> f64 {
        let log_tail = if self.b == 1.0 {
            0.0
        } else {
            (self.b - 1.0) * (-y.exp_m1()).ln()
        };
        a * y + log_tail - log_norm
    }

    fn log_density(&self, y: f64) -> f64 {
        self.log_density_with(self.a, self.log_norm, y)
    }

    fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        quadrature::integrate(f, &self.breaks, QUAD_TOL).value
    }
}

/// Mean and variance of `ln X` for `X ~ Beta(a, b)` by quadrature.
pub fn beta_log_moments(a: f64, b: f64) -> Moments {
    let q = LogBetaQuadrature::new(a, b);
    let density = |y: f64| q.log_density(y).exp();
    let mass = q.integrate(density);
    let first = q.integrate(|y| (y - q.mode) * density(y)) / mass;
    let second = q.integrate(|y| {
        let d = y - q.mode;
        d * d * density(y)
    }) / mass;
    Moments {
        mean: q.mode + first,
        var: (second - first * first).max(0.0),
    }
}

/// `KL(Beta(a1, b) || Beta(a0, b))` by quadrature.
///
/// Integrates `Z + e^{-Z} - 1` under the first law, which has the same
/// expectation as `Z` but is pointwise nonnegative, so increments stay `>= 0`
/// even when the divergence is far below the quadrature tolerance.
pub fn beta_shape_kl(a1: f64, a0: f64, b: f64) -> f64 {
    if a1 == a0 {
        return 0.0;
    }
    let q = LogBetaQuadrature::new(a1, b);
    let log_norm0 = ln_beta(a0, b);
    let integrand = |y: f64| {
        let log_p1 = q.log_density(y);
        let log_p0 = q.log_density_with(a0, log_norm0, y);
        let z = log_p1 - log_p0;
        let value = if z.abs() < 1.0 {
            log_p1.exp() * (z + (-z).exp_m1())
        } else {
            log_p1.exp() * (z - 1.0) + log_p0.exp()
        };
        value.max(0.0)
    };
    q.integrate(integrand)
}
