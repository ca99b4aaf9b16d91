//! Forward-in-time samplers.
//!
//! Ogata thinning with the current total intensity as a piecewise-constant
//! upper bound, valid because every kernel is non-increasing. An accepted
//! point is attributed to a side and then to a parent in proportion to each
//! existing point's share of that side's intensity, which is the exact
//! branching-view attribution for superposed Poisson reply streams.
//!
//! A sampler stops once the residual reply mass of the whole cluster falls
//! below [`TAIL_CUTOFF`], so the chance of truncating a real point is below
//! that value.

use rand::Rng;

use super::record::{ClusterRecord, Side};
use super::{InteractionParams, MAX_CLUSTER_POINTS, TAIL_CUTOFF};
use crate::error::{Error, Result};
use crate::kernels::ResponseKernel;

const MODULE: &str = "cluster-sim";

pub(crate) fn require_monotone(kernels: &[&ResponseKernel]) -> Result<()> {
    if kernels.iter().all(|k| k.is_non_increasing()) {
        Ok(())
    } else {
        Err(Error::domain(MODULE, "thinning requires non-increasing kernels"))
    }
}

#[inline]
fn exp_gap<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> f64 {
    // 1 - U lies in (0, 1]
    -(1.0 - rng.random::<f64>()).ln() / rate
}

/// Two-sided cluster by intensity thinning.
pub fn simulate_cluster_thinning<R: Rng + ?Sized>(params: &InteractionParams, rng: &mut R) -> Result<ClusterRecord> {
    params.validate()?;
    require_monotone(&[&params.g1, &params.g2])?;
    let (g1, g2, eta) = (params.g1, params.g2, params.eta);

    // (side-1 intensity, side-2 intensity, residual mass) at time t
    let state = |epochs: &[f64], t: f64| {
        let mut m1 = 0.0;
        let mut m2 = 0.0;
        let mut tail = 0.0;
        for &e in epochs {
            let s = t - e;
            m1 += g1.eval_unchecked(s);
            m2 += eta * g2.eval_unchecked(eta * s);
            tail += g1.tail_mass_unchecked(s) + g2.tail_mass_unchecked(eta * s);
        }
        (m1, m2, tail)
    };

    let mut rec = ClusterRecord::singleton(1.0);
    let mut t = 0.0;
    let (mut m1, mut m2, mut tail) = state(&rec.epochs, t);
    loop {
        let bound = m1 + m2;
        if tail < TAIL_CUTOFF || !(bound > 0.0) {
            break;
        }
        t += exp_gap(bound, rng);
        let (c1, c2, c_tail) = state(&rec.epochs, t);
        let lambda = c1 + c2;
        if rng.random::<f64>() * bound < lambda {
            let side = if rng.random::<f64>() * lambda < c1 { Side::One } else { Side::Two };
            let target = rng.random::<f64>() * if side == Side::One { c1 } else { c2 };
            let mut acc = 0.0;
            let mut parent = rec.epochs.len() - 1;
            for (i, &e) in rec.epochs.iter().enumerate() {
                let s = t - e;
                acc += match side {
                    Side::One => g1.eval_unchecked(s),
                    _ => eta * g2.eval_unchecked(eta * s),
                };
                if target < acc {
                    parent = i;
                    break;
                }
            }
            rec.epochs.push(t);
            rec.sides.push(side);
            rec.parents.push(Some(parent));
            rec.marks.push(1.0);
            if rec.epochs.len() > MAX_CLUSTER_POINTS {
                return Err(Error::divergence(
                    MODULE,
                    format!("cluster exceeded {MAX_CLUSTER_POINTS} points"),
                ));
            }
            // right limit after the jump
            m1 = c1 + g1.eval_unchecked(0.0);
            m2 = c2 + eta * g2.eval_unchecked(0.0);
            tail = c_tail + g1.mass() + g2.mass();
        } else {
            m1 = c1;
            m2 = c2;
            tail = c_tail;
        }
    }
    debug_assert!(rec.check_invariants().is_ok());
    Ok(rec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    #[test]
    fn zero_mass_gives_singleton() {
        let p = InteractionParams::exponential(0.0, 0.0, 1.0, 1.0, 1.0).unwrap();
        let mut rng = RngStream::new(1).rng();
        for _ in 0..100 {
            let r = simulate_cluster_thinning(&p, &mut rng).unwrap();
            assert_eq!(r.size(), 1);
            assert_eq!(r.duration(), 0.0);
        }
    }

    #[test]
    fn unstable_params_rejected() {
        let p = InteractionParams {
            g1: ResponseKernel::exponential(0.6, 1.0).unwrap(),
            g2: ResponseKernel::exponential(0.5, 1.0).unwrap(),
            eta: 1.0,
        };
        let mut rng = RngStream::new(2).rng();
        assert!(matches!(simulate_cluster_thinning(&p, &mut rng), Err(Error::Stability { .. })));
    }

    #[test]
    fn records_satisfy_invariants() {
        let p = InteractionParams::exponential(0.3, 0.4, 1.0, 3.0, 0.5).unwrap();
        let mut rng = RngStream::new(3).rng();
        for _ in 0..2000 {
            let r = simulate_cluster_thinning(&p, &mut rng).unwrap();
            r.check_invariants().unwrap();
        }
    }

    #[test]
    fn mean_size_is_borel_mean() {
        let p = InteractionParams::exponential(0.25, 0.25, 1.0, 1.0, 1.0).unwrap();
        let mut rng = RngStream::new(4).rng();
        let n = 200_000;
        let sizes: Vec<f64> = (0..n)
            .map(|_| simulate_cluster_thinning(&p, &mut rng).unwrap().size() as f64)
            .collect();
        let ci = crate::stats::mean_ci(&sizes, 0.99).unwrap();
        assert!((ci.mean - 2.0).abs() < 3.0 * ci.std_error, "{ci:?}");
    }
}
