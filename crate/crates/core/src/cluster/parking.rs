//! End-state conditioned two-sided sampler.
//!
//! Draw the size from the Borel law, the reply tree from a uniform parking
//! function, sides by independent coin flips, and finally the offsets. Point
//! `i` (in tree order) replies to point `d_i - 1`, where `d` is the sorted
//! parking function.

use rand::Rng;

use super::record::{ClusterRecord, Side};
use super::{InteractionParams, MAX_CLUSTER_POINTS};
use crate::combinatorics::{pollak_unchecked, BorelLaw, ParkingFunction};
use crate::error::{Error, Result};

const MODULE: &str = "cluster-sim";

fn draw_size<R: Rng + ?Sized>(params: &InteractionParams, rng: &mut R) -> Result<usize> {
    let n = BorelLaw::new(params.rho())?.sample(rng) as usize;
    if n > MAX_CLUSTER_POINTS {
        return Err(Error::divergence(MODULE, format!("cluster size {n} exceeds {MAX_CLUSTER_POINTS}")));
    }
    Ok(n)
}

/// Two-sided cluster through the parking-function construction.
pub fn simulate_cluster_parking<R: Rng + ?Sized>(params: &InteractionParams, rng: &mut R) -> Result<ClusterRecord> {
    simulate_cluster_parking_traced(params, rng).map(|(rec, _)| rec)
}

/// As [`simulate_cluster_parking`], also returning the parking function that
/// shaped the reply tree (`None` for a single-point cluster).
pub fn simulate_cluster_parking_traced<R: Rng + ?Sized>(
    params: &InteractionParams,
    rng: &mut R,
) -> Result<(ClusterRecord, Option<ParkingFunction>)> {
    params.validate()?;
    let n = draw_size(params, rng)?;
    if n == 1 {
        return Ok((ClusterRecord::singleton(1.0), None));
    }
    let pf = pollak_unchecked(n - 1, rng);
    let mut steps = pf.clone();
    steps.sort_unstable();
    let p1 = params.rho1() / params.rho();

    let mut times = vec![0.0; n];
    let mut sides = vec![Side::Initial; n];
    let mut parents = vec![None; n];
    for i in 1..n {
        let parent = steps[i - 1] as usize - 1;
        let (side, delta) = if rng.random::<f64>() < p1 {
            (Side::One, params.g1.sample_offset(rng))
        } else {
            (Side::Two, params.g2.sample_offset(rng) / params.eta)
        };
        times[i] = times[parent] + delta;
        sides[i] = side;
        parents[i] = Some(parent);
    }
    let rec = ClusterRecord::from_unsorted(times, sides, parents, vec![1.0; n]);
    Ok((rec, Some(ParkingFunction::new(pf)?)))
}

/// Duration when the other side replies instantaneously: offsets on the
/// non-pacing side are zero, and side-2 offsets are drawn at `eta = 1`, so
/// the result never depends on `params.eta`.
pub fn simulate_asynchrony_limit<R: Rng + ?Sized>(side: Side, params: &InteractionParams, rng: &mut R) -> Result<f64> {
    if side == Side::Initial {
        return Err(Error::domain(MODULE, "asynchrony limit needs side 1 or side 2"));
    }
    params.validate()?;
    let n = draw_size(params, rng)?;
    if n == 1 {
        return Ok(0.0);
    }
    let mut steps = pollak_unchecked(n - 1, rng);
    steps.sort_unstable();
    let p1 = params.rho1() / params.rho();
    let mut times = vec![0.0; n];
    let mut longest: f64 = 0.0;
    for i in 1..n {
        let parent = steps[i - 1] as usize - 1;
        let is_one = rng.random::<f64>() < p1;
        let delta = match (side, is_one) {
            (Side::One, true) => params.g1.sample_offset(rng),
            (Side::Two, false) => params.g2.sample_offset(rng),
            _ => 0.0,
        };
        times[i] = times[parent] + delta;
        longest = longest.max(times[i]);
    }
    Ok(longest)
}
