//! Throughput analytics for a concurrent agent.
//!
//! With `a = E[τ̄¹]` and `b = E[τ̄²]` the one-sided asynchrony means, the
//! throughput `K / E[τ(K)]` is bracketed by the guaranteed rate
//! `K / (a + b h(K))` and the idealized rate `K / max(a, b h(K))`.

mod shape;
mod sweep;

pub use shape::{classify_shape, CurveKind, CurvePoint, Shape, ThroughputCurve};
pub use sweep::{
    analytic_curve, check_duration_bounds, estimate_throughput, sweep_concurrency, sweep_interdependence,
    BoundsReport, ConcurrencyRow, ConcurrencySweep, InterdependenceRow, InterdependenceSweep,
};

use serde::{Deserialize, Serialize};

use crate::cluster::{InteractionParams, Side, CI_CONFIDENCE};
use crate::error::{Error, Result};
use crate::kernels::SlowdownSpec;
use crate::rng::{replicate, RngStream};
use crate::stats::RunningStats;

const MODULE: &str = "performance";

/// Residual bound on the optimal-concurrency equation; the solver bisects to
/// floating-point resolution, which meets it.
pub const KSTAR_TOLERANCE: f64 = 1e-10;
const BRACKET_LOW: f64 = 1e-6;
const BRACKET_CAP: f64 = 1e12;

/// Mean durations under 1-paced and 2-paced asynchrony.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AsyncMeans {
    pub mean_tau1: f64,
    pub mean_tau2: f64,
    /// Interval half-widths at [`CI_CONFIDENCE`]; zero for exact values.
    pub ci_half_widths: (f64, f64),
    pub std_errors: (f64, f64),
}

impl AsyncMeans {
    pub fn exact(mean_tau1: f64, mean_tau2: f64) -> Result<Self> {
        let m = Self {
            mean_tau1,
            mean_tau2,
            ci_half_widths: (0.0, 0.0),
            std_errors: (0.0, 0.0),
        };
        m.validate()?;
        Ok(m)
    }

    /// Monte-Carlo estimate from `reps` draws per side.
    pub fn estimate(params: &InteractionParams, reps: usize, stream: RngStream) -> Result<Self> {
        let mut out = [RunningStats::default(); 2];
        for (slot, side) in [Side::One, Side::Two].into_iter().enumerate() {
            let xs = replicate(reps, stream.derive(slot as u64), |rng| {
                crate::cluster::simulate_asynchrony_limit(side, params, rng)
            })?;
            xs.iter().for_each(|&x| out[slot].push(x));
        }
        let c1 = out[0].ci(CI_CONFIDENCE)?;
        let c2 = out[1].ci(CI_CONFIDENCE)?;
        Ok(Self {
            mean_tau1: c1.mean,
            mean_tau2: c2.mean,
            ci_half_widths: (c1.half_width, c2.half_width),
            std_errors: (c1.std_error, c2.std_error),
        })
    }

    fn validate(&self) -> Result<()> {
        if !(self.mean_tau1 >= 0.0 && self.mean_tau2 >= 0.0) {
            return Err(Error::domain(
                MODULE,
                format!("asynchrony means must be >= 0, got ({}, {})", self.mean_tau1, self.mean_tau2),
            ));
        }
        Ok(())
    }

    fn require_positive(&self) -> Result<()> {
        if !(self.mean_tau1 > 0.0 && self.mean_tau2 > 0.0) {
            return Err(Error::domain(
                MODULE,
                format!("asynchrony means must be > 0, got ({}, {})", self.mean_tau1, self.mean_tau2),
            ));
        }
        Ok(())
    }
}

fn require_k(k: f64) -> Result<()> {
    if !(k.is_finite() && k > 0.0) {
        return Err(Error::domain(MODULE, format!("concurrency must be > 0, got K = {k}")));
    }
    Ok(())
}

/// `K / (E[τ̄¹] + E[τ̄²] h(K))`.
pub fn guaranteed_rate(means: &AsyncMeans, h: &SlowdownSpec, k: f64) -> Result<f64> {
    require_k(k)?;
    Ok(k / (means.mean_tau1 + means.mean_tau2 * h.eval(k)?))
}

/// `K / max(E[τ̄¹], E[τ̄²] h(K))`.
pub fn idealized_rate(means: &AsyncMeans, h: &SlowdownSpec, k: f64) -> Result<f64> {
    require_k(k)?;
    Ok(k / means.mean_tau1.max(means.mean_tau2 * h.eval(k)?))
}

/// Throughput when both sides slow down by `h(K)`: `K / (E[τ̂(1)] h(K))`.
pub fn symmetric_rate(mean_hat_tau1: f64, h: &SlowdownSpec, k: f64) -> Result<f64> {
    require_k(k)?;
    if !(mean_hat_tau1 > 0.0) {
        return Err(Error::domain(MODULE, format!("base duration must be > 0, got {mean_hat_tau1}")));
    }
    Ok(k / (mean_hat_tau1 * h.eval(k)?))
}

/// Maximizer of the guaranteed rate and the interval that must contain the
/// maximizer of the true throughput.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct OptimalConcurrency {
    pub k_star: f64,
    pub k_lower: f64,
    pub k_upper: f64,
    /// Guaranteed rate at `k_star`, its maximum.
    pub g_at_star: f64,
    /// Maximum of the idealized rate, attained at `h⁻¹(E[τ̄¹]/E[τ̄²])`.
    pub i_at_star: f64,
}

fn require_convex(h: &SlowdownSpec) -> Result<()> {
    if !h.is_strictly_convex() {
        return Err(Error::no_optimum(
            MODULE,
            format!("slowdown {h:?} is not strictly convex, so the guaranteed rate has no interior maximum"),
        ));
    }
    Ok(())
}

/// Bisection on an increasing map with `f(lo) < 0 < f(hi)`, until
/// `|f| < tol` or the bracket stops shrinking.
fn bisect<F: Fn(f64) -> f64>(mut lo: f64, mut hi: f64, tol: f64, f: F) -> f64 {
    for _ in 0..4000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return mid;
        }
        let v = f(mid);
        if v.abs() < tol {
            return mid;
        }
        if v < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Bracket the root of an increasing map: start at `[lo, hi]`, halve `lo`
/// and double `hi` until the signs straddle zero.
fn bracket<F: Fn(f64) -> f64>(mut lo: f64, mut hi: f64, f: &F) -> Result<(f64, f64)> {
    while f(lo) > 0.0 {
        lo *= 0.5;
        if lo < f64::MIN_POSITIVE {
            return Err(Error::no_optimum(MODULE, "root lies below the smallest positive concurrency"));
        }
    }
    while f(hi) < 0.0 {
        hi *= 2.0;
        if hi > BRACKET_CAP {
            return Err(Error::no_optimum(MODULE, format!("no root below K = {BRACKET_CAP}")));
        }
    }
    Ok((lo, hi))
}

fn finish(means: &AsyncMeans, h: &SlowdownSpec, k_star: f64, k_lower: f64, k_upper: f64) -> Result<OptimalConcurrency> {
    let k_ideal = h.inverse(means.mean_tau1 / means.mean_tau2)?;
    Ok(OptimalConcurrency {
        k_star,
        k_lower,
        k_upper,
        g_at_star: guaranteed_rate(means, h, k_star)?,
        i_at_star: k_ideal / means.mean_tau1,
    })
}

/// Solve `K h'(K) - h(K) = E[τ̄¹]/E[τ̄²]` numerically, then the bracket
/// `K̲ = E[τ̄¹] / (E[τ̄²] h'(K*))` and `K̄` with `h(K̄)/K̄ = h'(K*)`.
pub fn solve_kstar(means: &AsyncMeans, h: &SlowdownSpec) -> Result<OptimalConcurrency> {
    require_convex(h)?;
    means.require_positive()?;
    let ratio = means.mean_tau1 / means.mean_tau2;
    let f = |k: f64| k * h.derivative_unchecked(k) - h.eval_unchecked(k) - ratio;
    let (lo, hi) = bracket(BRACKET_LOW, 1.0_f64.max(BRACKET_LOW * 2.0), &f)?;
    let k_star = bisect(lo, hi, 0.0, f);

    let slope = h.derivative_unchecked(k_star);
    let k_lower = ratio / slope;
    let g = |k: f64| h.eval_unchecked(k) / k - slope;
    let (lo, hi) = bracket(k_star, 2.0 * k_star, &g)?;
    let k_upper = bisect(lo, hi, 0.0, g);
    finish(means, h, k_star, k_lower, k_upper)
}

/// Closed form for `h(K) = K^σ`, `σ > 1`.
pub fn poly_kstar(means: &AsyncMeans, sigma: f64) -> Result<OptimalConcurrency> {
    let h = SlowdownSpec::polynomial(sigma)?;
    require_convex(&h)?;
    means.require_positive()?;
    let k_star = (means.mean_tau1 / ((sigma - 1.0) * means.mean_tau2)).powf(1.0 / sigma);
    finish(
        means,
        &h,
        k_star,
        (1.0 - 1.0 / sigma) * k_star,
        sigma.powf(1.0 / (sigma - 1.0)) * k_star,
    )
}
