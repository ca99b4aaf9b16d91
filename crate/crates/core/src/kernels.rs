//! Response kernels and agent slowdown functions.
//!
//! A [`ResponseKernel`] `g` is the rate of direct replies `t` time units after
//! a contribution. Its total mass is the mean number of direct replies, and the
//! normalized density `g / mass` is the law of a single reply offset.
//!
//! A [`SlowdownSpec`] `h` maps agent concurrency to the dilation of agent-side
//! response times; the agent's synchronicity at concurrency `K` is `1 / h(K)`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MODULE: &str = "core-kernels";

/// A one-directional response function.
///
/// Serialized as `{"kind":"exponential","alpha":…,"beta":…}`.
///
/// A zero jump (`alpha == 0`) is accepted and denotes the null kernel: no
/// replies in that direction. The decay still parameterizes the offset law so
/// that masses can be rescaled without changing the shape.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", try_from = "RawKernel")]
pub enum ResponseKernel {
    /// `g(t) = alpha * exp(-beta * t)`.
    Exponential { alpha: f64, beta: f64 },
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum RawKernel {
    Exponential { alpha: f64, beta: f64 },
}

impl TryFrom<RawKernel> for ResponseKernel {
    type Error = Error;

    fn try_from(raw: RawKernel) -> Result<Self> {
        match raw {
            RawKernel::Exponential { alpha, beta } => ResponseKernel::exponential(alpha, beta),
        }
    }
}

impl ResponseKernel {
    pub fn exponential(alpha: f64, beta: f64) -> Result<Self> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::domain(
                MODULE,
                format!("exponential decay must be finite and > 0, got beta = {beta}"),
            ));
        }
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(Error::domain(
                MODULE,
                format!("exponential jump must be finite and >= 0, got alpha = {alpha}"),
            ));
        }
        Ok(ResponseKernel::Exponential { alpha, beta })
    }

    /// Exponential kernel with the given mass and decay.
    pub fn exponential_with_mass(mass: f64, beta: f64) -> Result<Self> {
        Self::exponential(mass * beta, beta)
    }

    /// The same shape rescaled to total mass `mass`; only the jump changes.
    pub fn with_mass(&self, mass: f64) -> Result<Self> {
        match *self {
            ResponseKernel::Exponential { beta, .. } => Self::exponential_with_mass(mass, beta),
        }
    }

    /// `g(t)`.
    pub fn eval(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        Ok(self.eval_unchecked(t))
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, t: f64) -> f64 {
        match *self {
            ResponseKernel::Exponential { alpha, beta } => alpha * (-beta * t).exp(),
        }
    }

    /// Total mass, the mean number of direct replies.
    #[inline]
    pub fn mass(&self) -> f64 {
        match *self {
            ResponseKernel::Exponential { alpha, beta } => alpha / beta,
        }
    }

    /// `∫ t g(t) dt` over the positive half-line.
    pub fn mean_offset_numerator(&self) -> f64 {
        match *self {
            ResponseKernel::Exponential { alpha, beta } => alpha / (beta * beta),
        }
    }

    /// Mean of the normalized offset law.
    pub fn mean_offset(&self) -> f64 {
        match *self {
            ResponseKernel::Exponential { beta, .. } => 1.0 / beta,
        }
    }

    /// Normalized CDF of the offset law, `G(t) / mass`.
    pub fn cdf(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        Ok(match *self {
            ResponseKernel::Exponential { beta, .. } => -(-beta * t).exp_m1(),
        })
    }

    /// Unnormalized residual mass `∫_t^∞ g`.
    #[inline]
    pub(crate) fn tail_mass_unchecked(&self, t: f64) -> f64 {
        match *self {
            ResponseKernel::Exponential { alpha, beta } => alpha / beta * (-beta * t).exp(),
        }
    }

    /// Inverse of the normalized CDF: the offset at quantile `u`.
    pub fn inverse_cdf(&self, u: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&u) {
            return Err(Error::domain(
                MODULE,
                format!("inverse CDF quantile must lie in [0, 1), got u = {u}"),
            ));
        }
        Ok(self.inverse_cdf_unchecked(u))
    }

    #[inline]
    fn inverse_cdf_unchecked(&self, u: f64) -> f64 {
        match *self {
            ResponseKernel::Exponential { beta, .. } => -(-u).ln_1p() / beta,
        }
    }

    /// One draw from the normalized offset law.
    #[inline]
    pub fn sample_offset<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        // random::<f64>() lies in [0, 1)
        self.inverse_cdf_unchecked(rng.random::<f64>())
    }

    /// Whether `g` is non-increasing, which the thinning samplers rely on.
    pub fn is_non_increasing(&self) -> bool {
        match self {
            ResponseKernel::Exponential { .. } => true,
        }
    }
}

fn check_time(t: f64) -> Result<()> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::domain(
            MODULE,
            format!("kernel time argument must be >= 0, got t = {t}"),
        ));
    }
    Ok(())
}

/// Agent-side slowdown function `h`.
///
/// Serialized as `{"kind":"polynomial","sigma":…}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", try_from = "RawSlowdown")]
pub enum SlowdownSpec {
    /// `h(K) = K^sigma`.
    Polynomial { sigma: f64 },
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum RawSlowdown {
    Polynomial { sigma: f64 },
}

impl TryFrom<RawSlowdown> for SlowdownSpec {
    type Error = Error;

    fn try_from(raw: RawSlowdown) -> Result<Self> {
        match raw {
            RawSlowdown::Polynomial { sigma } => SlowdownSpec::polynomial(sigma),
        }
    }
}

impl SlowdownSpec {
    pub fn polynomial(sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::domain(
                MODULE,
                format!("polynomial slowdown exponent must be finite and > 0, got sigma = {sigma}"),
            ));
        }
        Ok(SlowdownSpec::Polynomial { sigma })
    }

    pub fn sigma(&self) -> f64 {
        match *self {
            SlowdownSpec::Polynomial { sigma } => sigma,
        }
    }

    /// `h(K)`.
    pub fn eval(&self, k: f64) -> Result<f64> {
        check_concurrency(k)?;
        Ok(self.eval_unchecked(k))
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, k: f64) -> f64 {
        match *self {
            SlowdownSpec::Polynomial { sigma } => k.powf(sigma),
        }
    }

    /// `h'(K)`.
    pub fn derivative(&self, k: f64) -> Result<f64> {
        check_concurrency(k)?;
        Ok(self.derivative_unchecked(k))
    }

    #[inline]
    pub(crate) fn derivative_unchecked(&self, k: f64) -> f64 {
        match *self {
            SlowdownSpec::Polynomial { sigma } => {
                if k == 0.0 {
                    if sigma > 1.0 {
                        0.0
                    } else if sigma == 1.0 {
                        1.0
                    } else {
                        f64::INFINITY
                    }
                } else {
                    sigma * k.powf(sigma - 1.0)
                }
            }
        }
    }

    /// Agent synchronicity at concurrency `K`, `1 / h(K)`.
    pub fn synchronicity(&self, k: f64) -> Result<f64> {
        let h = self.eval(k)?;
        if h <= 0.0 {
            return Err(Error::domain(
                MODULE,
                format!("synchronicity needs h(K) > 0, got h({k}) = {h}"),
            ));
        }
        Ok(1.0 / h)
    }

    /// Strict convexity, the regime with an interior optimal concurrency.
    pub fn is_strictly_convex(&self) -> bool {
        match *self {
            SlowdownSpec::Polynomial { sigma } => sigma > 1.0,
        }
    }

    /// `h⁻¹(y)` for `y >= 0`.
    pub fn inverse(&self, y: f64) -> Result<f64> {
        if y.is_nan() || y < 0.0 {
            return Err(Error::domain(
                MODULE,
                format!("slowdown inverse needs y >= 0, got y = {y}"),
            ));
        }
        Ok(match *self {
            SlowdownSpec::Polynomial { sigma } => y.powf(1.0 / sigma),
        })
    }
}

fn check_concurrency(k: f64) -> Result<()> {
    if k.is_nan() || k < 0.0 {
        return Err(Error::domain(
            MODULE,
            format!("concurrency must be >= 0, got K = {k}"),
        ));
    }
    Ok(())
}
