use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MODULE: &str = "performance";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum CurveKind {
    Guaranteed,
    Idealized,
    MonteCarlo,
    Symmetric,
}

/// One curve value at grid position `x`, with its interval half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CurvePoint {
    pub x: f64,
    pub estimate: f64,
    pub ci_half_width: f64,
}

impl CurvePoint {
    pub fn exact(x: f64, estimate: f64) -> Self {
        Self {
            x,
            estimate,
            ci_half_width: 0.0,
        }
    }

    pub fn ci_low(&self) -> f64 {
        self.estimate - self.ci_half_width
    }

    pub fn ci_high(&self) -> f64 {
        self.estimate + self.ci_half_width
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThroughputCurve {
    pub kind: CurveKind,
    pub points: Vec<CurvePoint>,
}

impl ThroughputCurve {
    /// Checks that the grid is strictly increasing and values are finite and
    /// non-negative.
    pub fn new(kind: CurveKind, points: Vec<CurvePoint>) -> Result<Self> {
        if points.windows(2).any(|w| !(w[1].x > w[0].x)) {
            return Err(Error::domain(MODULE, "curve grid must be strictly increasing"));
        }
        if let Some(p) = points
            .iter()
            .find(|p| !(p.estimate.is_finite() && p.estimate >= 0.0 && p.ci_half_width >= 0.0))
        {
            return Err(Error::domain(
                MODULE,
                format!("curve value at x = {} must be finite and >= 0, got {} ± {}", p.x, p.estimate, p.ci_half_width),
            ));
        }
        Ok(Self { kind, points })
    }

    pub fn grid(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.x).collect()
    }

    pub fn argmax(&self) -> Option<usize> {
        (0..self.points.len()).max_by(|&a, &b| self.points[a].estimate.total_cmp(&self.points[b].estimate))
    }

    pub fn argmin(&self) -> Option<usize> {
        (0..self.points.len()).min_by(|&a, &b| self.points[a].estimate.total_cmp(&self.points[b].estimate))
    }
}

/// Finite-grid shape of a curve, judged against its interval widths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Shape {
    CapShaped,
    CupShaped,
    MonotoneLike,
    Inconclusive,
}

impl Shape {
    pub fn label(&self) -> &'static str {
        match self {
            Shape::CapShaped => "capShaped",
            Shape::CupShaped => "cupShaped",
            Shape::MonotoneLike => "monotoneLike",
            Shape::Inconclusive => "inconclusive",
        }
    }
}

/// `CapShaped` if some interior point exceeds both endpoints by more than the
/// summed half-widths, `CupShaped` likewise below, `MonotoneLike` if all
/// successive differences share a sign up to their summed half-widths.
/// Curves with fewer than three points are inconclusive.
pub fn classify_shape(curve: &ThroughputCurve) -> Shape {
    let p = &curve.points;
    let n = p.len();
    if n < 3 {
        return Shape::Inconclusive;
    }
    let (first, last) = (p[0], p[n - 1]);
    let beats = |i: usize, e: CurvePoint, sign: f64| sign * (p[i].estimate - e.estimate) > p[i].ci_half_width + e.ci_half_width;
    if (1..n - 1).any(|i| beats(i, first, 1.0) && beats(i, last, 1.0)) {
        return Shape::CapShaped;
    }
    if (1..n - 1).any(|i| beats(i, first, -1.0) && beats(i, last, -1.0)) {
        return Shape::CupShaped;
    }
    let steps = || p.windows(2).map(|w| (w[1].estimate - w[0].estimate, w[0].ci_half_width + w[1].ci_half_width));
    let up = steps().all(|(d, slack)| d >= -slack);
    let down = steps().all(|(d, slack)| d <= slack);
    if up || down {
        Shape::MonotoneLike
    } else {
        Shape::Inconclusive
    }
}
