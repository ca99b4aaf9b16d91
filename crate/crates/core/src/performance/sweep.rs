use serde::{Deserialize, Serialize};

use super::shape::{CurveKind, CurvePoint, ThroughputCurve};
use super::{guaranteed_rate, idealized_rate, solve_kstar, symmetric_rate, AsyncMeans, OptimalConcurrency};
use crate::cluster::{estimate_duration_stats, DurationSampler, InteractionParams};
use crate::error::{Error, Result};
use crate::kernels::SlowdownSpec;
use crate::rng::RngStream;
use crate::stats::MeanCi;

const MODULE: &str = "performance";

fn require_grid(grid: &[f64], what: &str) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::domain(MODULE, format!("{what} grid is empty")));
    }
    if grid.iter().any(|&x| !(x.is_finite() && x > 0.0)) || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::domain(
            MODULE,
            format!("{what} grid must be positive and strictly increasing"),
        ));
    }
    Ok(())
}

/// Monte-Carlo throughput `K / Ê[τ(K)]` with the agent at synchronicity
/// `1/h(K)`. The half-width comes from the delta method, `K·hw / Ê[τ]²`.
pub fn estimate_throughput(
    template: &InteractionParams,
    h: &SlowdownSpec,
    k: f64,
    reps: usize,
    stream: RngStream,
) -> Result<CurvePoint> {
    let params = template.with_eta(h.synchronicity(k)?)?;
    let stats = estimate_duration_stats(&DurationSampler::Parking { params }, reps, stream)?;
    if !(stats.mean > 0.0) {
        return Err(Error::domain(MODULE, "mean duration is 0, throughput is unbounded"));
    }
    Ok(CurvePoint {
        x: k,
        estimate: k / stats.mean,
        ci_half_width: k * stats.ci_half_width / (stats.mean * stats.mean),
    })
}

/// Guaranteed or idealized rate over a grid.
pub fn analytic_curve(kind: CurveKind, means: &AsyncMeans, h: &SlowdownSpec, grid: &[f64]) -> Result<ThroughputCurve> {
    let f = match kind {
        CurveKind::Guaranteed => guaranteed_rate,
        CurveKind::Idealized => idealized_rate,
        CurveKind::Symmetric => {
            let pts = grid
                .iter()
                .map(|&k| symmetric_rate(means.mean_tau1, h, k).map(|r| CurvePoint::exact(k, r)))
                .collect::<Result<_>>()?;
            return ThroughputCurve::new(kind, pts);
        }
        CurveKind::MonteCarlo => return Err(Error::domain(MODULE, "Monte-Carlo curves are not analytic")),
    };
    let pts = grid
        .iter()
        .map(|&k| f(means, h, k).map(|r| CurvePoint::exact(k, r)))
        .collect::<Result<_>>()?;
    ThroughputCurve::new(kind, pts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ConcurrencyRow {
    pub k: f64,
    pub monte_carlo: Option<CurvePoint>,
    pub guaranteed: f64,
    pub idealized: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ConcurrencySweep {
    pub means: AsyncMeans,
    pub rows: Vec<ConcurrencyRow>,
}

impl ConcurrencySweep {
    /// Monte-Carlo curve over the grid points that succeeded.
    pub fn monte_carlo_curve(&self) -> Result<ThroughputCurve> {
        ThroughputCurve::new(CurveKind::MonteCarlo, self.rows.iter().filter_map(|r| r.monte_carlo).collect())
    }
}

/// Throughput over a concurrency grid, plus the analytic bounds from `means`.
/// A failing grid point is recorded in its row and the sweep continues.
pub fn sweep_concurrency(
    template: &InteractionParams,
    h: &SlowdownSpec,
    grid: &[f64],
    reps: usize,
    means: &AsyncMeans,
    stream: RngStream,
) -> Result<ConcurrencySweep> {
    require_grid(grid, "concurrency")?;
    template.validate()?;
    let rows = grid
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            let mc = estimate_throughput(template, h, k, reps, stream.derive(i as u64));
            Ok(ConcurrencyRow {
                k,
                guaranteed: guaranteed_rate(means, h, k)?,
                idealized: idealized_rate(means, h, k)?,
                error: mc.as_ref().err().map(|e| e.to_string()),
                monte_carlo: mc.ok(),
            })
        })
        .collect::<Result<_>>()?;
    Ok(ConcurrencySweep { means: *means, rows })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct InterdependenceRow {
    pub rho1: f64,
    pub means: Option<AsyncMeans>,
    pub optimum: Option<OptimalConcurrency>,
    /// Monte-Carlo throughput at the plug-in optimal concurrency; `x` is `rho1`.
    pub throughput: Option<CurvePoint>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct InterdependenceSweep {
    pub rho_total: f64,
    pub rows: Vec<InterdependenceRow>,
}

impl InterdependenceSweep {
    pub fn curve(&self) -> Result<ThroughputCurve> {
        ThroughputCurve::new(CurveKind::MonteCarlo, self.rows.iter().filter_map(|r| r.throughput).collect())
    }
}

/// Optimized throughput as the total mass `rho_total` is split between the
/// sides. Kernel shapes (decay rates) come from `template`; only the masses
/// are rescaled.
pub fn sweep_interdependence(
    template: &InteractionParams,
    rho_total: f64,
    rho1_grid: &[f64],
    h: &SlowdownSpec,
    reps: usize,
    stream: RngStream,
) -> Result<InterdependenceSweep> {
    if !(rho_total > 0.0) {
        return Err(Error::domain(MODULE, format!("total mass must be > 0, got {rho_total}")));
    }
    if !(rho_total < 1.0) {
        return Err(Error::stability(MODULE, format!("total mass must be < 1, got {rho_total}")));
    }
    require_grid(rho1_grid, "interdependence")?;
    if rho1_grid.iter().any(|&r| !(r < rho_total)) {
        return Err(Error::domain(
            MODULE,
            format!("rho1 grid must lie strictly inside (0, {rho_total})"),
        ));
    }
    if !h.is_strictly_convex() {
        return Err(Error::no_optimum(MODULE, "interdependence sweep needs a strictly convex slowdown"));
    }
    let rows = rho1_grid
        .iter()
        .enumerate()
        .map(|(i, &rho1)| {
            let mut row = InterdependenceRow {
                rho1,
                means: None,
                optimum: None,
                throughput: None,
                error: None,
            };
            let run = |row: &mut InterdependenceRow| -> Result<()> {
                let params = InteractionParams::new(
                    template.g1.with_mass(rho1)?,
                    template.g2.with_mass(rho_total - rho1)?,
                    1.0,
                )?;
                let means = AsyncMeans::estimate(&params, reps, stream.derive(2 * i as u64))?;
                row.means = Some(means);
                let opt = solve_kstar(&means, h)?;
                row.optimum = Some(opt);
                let mut pt = estimate_throughput(&params, h, opt.k_star, reps, stream.derive(2 * i as u64 + 1))?;
                pt.x = rho1;
                row.throughput = Some(pt);
                Ok(())
            };
            if let Err(e) = run(&mut row) {
                row.error = Some(e.to_string());
            }
            row
        })
        .collect();
    Ok(InterdependenceSweep { rho_total, rows })
}

/// Position of a duration estimate relative to the affine bounds
/// `max(E[τ̄¹], E[τ̄²]/η) <= E[τ] <= E[τ̄¹] + E[τ̄²]/η`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BoundsReport {
    pub eta: f64,
    pub lower: f64,
    pub upper: f64,
    pub estimate: f64,
    /// Summed half-widths of the estimate and of the plug-in bounds.
    pub slack: f64,
    /// `(upper - lower) / lower`.
    pub relative_gap: f64,
    pub passed: bool,
}

pub fn check_duration_bounds(means: &AsyncMeans, eta: f64, estimate: &MeanCi) -> Result<BoundsReport> {
    if !(eta.is_finite() && eta > 0.0) {
        return Err(Error::domain(MODULE, format!("synchronicity must be > 0, got eta = {eta}")));
    }
    let a = means.mean_tau1;
    let b = means.mean_tau2 / eta;
    let (lower, upper) = (a.max(b), a + b);
    let slack = estimate.half_width + means.ci_half_widths.0 + means.ci_half_widths.1 / eta;
    Ok(BoundsReport {
        eta,
        lower,
        upper,
        estimate: estimate.mean,
        slack,
        relative_gap: if lower > 0.0 { (upper - lower) / lower } else { 0.0 },
        passed: lower - slack <= estimate.mean && estimate.mean <= upper + slack,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::performance::{classify_shape, Shape};
    use crate::stats::mean_ci;

    #[test]
    fn bounds_collapse_without_side_two() {
        let means = AsyncMeans::exact(1.5, 0.0).unwrap();
        let est = mean_ci(&[1.4, 1.6], 0.99).unwrap();
        let r = check_duration_bounds(&means, 3.0, &est).unwrap();
        assert_eq!((r.lower, r.upper), (1.5, 1.5));
        assert!(r.passed);
        assert!(check_duration_bounds(&means, 0.0, &est).is_err());
    }

    #[test]
    fn analytic_curves() {
        let means = AsyncMeans::exact(1.0, 1.0).unwrap();
        let h = SlowdownSpec::polynomial(2.0).unwrap();
        let g = analytic_curve(CurveKind::Guaranteed, &means, &h, &[0.25, 0.5, 1.0, 2.0, 4.0]).unwrap();
        assert_eq!(classify_shape(&g), Shape::CapShaped);
        assert!(analytic_curve(CurveKind::MonteCarlo, &means, &h, &[1.0]).is_err());
    }

    #[test]
    fn sweep_grid_validation() {
        let p = InteractionParams::exponential(0.2, 0.2, 1.0, 1.0, 1.0).unwrap();
        let h = SlowdownSpec::polynomial(2.0).unwrap();
        let means = AsyncMeans::exact(1.0, 1.0).unwrap();
        for bad in [vec![], vec![1.0, 1.0], vec![0.0, 1.0]] {
            assert!(sweep_concurrency(&p, &h, &bad, 10, &means, RngStream::new(1)).is_err());
        }
        for bad in [vec![0.0, 0.1], vec![0.1, 0.4]] {
            assert!(matches!(
                sweep_interdependence(&p, 0.4, &bad, &h, 10, RngStream::new(1)),
                Err(Error::Domain { .. })
            ));
        }
    }

    #[test]
    fn small_sweep_within_bounds() {
        let p = InteractionParams::exponential(0.25, 0.25, 1.0, 1.0, 1.0).unwrap();
        let h = SlowdownSpec::polynomial(2.0).unwrap();
        let means = AsyncMeans::estimate(&p, 20_000, RngStream::new(2)).unwrap();
        let sweep = sweep_concurrency(&p, &h, &[0.5, 1.0, 2.0], 20_000, &means, RngStream::new(3)).unwrap();
        for row in &sweep.rows {
            let mc = row.monte_carlo.unwrap();
            // slack from both the estimate and the plug-in bounds
            let rel = (means.ci_half_widths.0 + means.ci_half_widths.1 * h.eval(row.k).unwrap())
                / (means.mean_tau1 + means.mean_tau2 * h.eval(row.k).unwrap());
            assert!(mc.ci_high() >= row.guaranteed * (1.0 - rel), "{row:?}");
            assert!(mc.ci_low() <= row.idealized * (1.0 + rel), "{row:?}");
        }
    }
}
