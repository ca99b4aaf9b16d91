use rand::Rng;
use serde::{Deserialize, Serialize};

use super::marked::{simulate_dyck_cluster, simulate_marked_thinning, DyckOverflow, MarkedParams};
use super::parking::{simulate_asynchrony_limit, simulate_cluster_parking};
use super::record::{ClusterRecord, Side};
use super::thinning::simulate_cluster_thinning;
use super::InteractionParams;
use crate::error::{Error, Result};
use crate::rng::{replicate, RngStream};
use crate::stats::RunningStats;

const MODULE: &str = "cluster-sim";

/// Confidence level of reported duration intervals.
pub const CI_CONFIDENCE: f64 = 0.99;

/// A cluster law to draw durations from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "camelCase")]
pub enum DurationSampler {
    Thinning { params: InteractionParams },
    Parking { params: InteractionParams },
    AsynchronyLimit { side: Side, params: InteractionParams },
    MarkedThinning { params: MarkedParams },
    DyckCluster { params: MarkedParams, overflow: DyckOverflow },
}

impl DurationSampler {
    /// Full record; the asynchrony limits only produce a duration.
    pub fn record<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Option<ClusterRecord>> {
        Ok(Some(match self {
            DurationSampler::Thinning { params } => simulate_cluster_thinning(params, rng)?,
            DurationSampler::Parking { params } => simulate_cluster_parking(params, rng)?,
            DurationSampler::MarkedThinning { params } => simulate_marked_thinning(params, rng)?,
            DurationSampler::DyckCluster { params, overflow } => simulate_dyck_cluster(params, *overflow, rng)?,
            DurationSampler::AsynchronyLimit { .. } => return Ok(None),
        }))
    }

    /// `(duration, size)`; size is 0 for the asynchrony limits.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(f64, usize)> {
        if let DurationSampler::AsynchronyLimit { side, params } = self {
            return Ok((simulate_asynchrony_limit(*side, params, rng)?, 0));
        }
        let rec = self.record(rng)?.expect("record-producing sampler");
        Ok((rec.duration(), rec.size()))
    }

    /// `reps` durations in replication order.
    pub fn durations(&self, reps: usize, stream: RngStream) -> Result<Vec<f64>> {
        replicate(reps, stream, |rng| self.sample(rng).map(|(d, _)| d))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DurationStats {
    pub reps: usize,
    pub mean: f64,
    pub variance: f64,
    pub std_error: f64,
    /// Half-width of the normal-approximation interval at [`CI_CONFIDENCE`].
    pub ci_half_width: f64,
    pub mean_size: f64,
}

/// Monte-Carlo mean and variance of the cluster duration.
pub fn estimate_duration_stats(sampler: &DurationSampler, reps: usize, stream: RngStream) -> Result<DurationStats> {
    if reps < 2 {
        return Err(Error::domain(MODULE, format!("need at least 2 replications, got {reps}")));
    }
    let draws = replicate(reps, stream, |rng| sampler.sample(rng))?;
    let mut dur = RunningStats::default();
    let mut size = RunningStats::default();
    for (d, n) in draws {
        dur.push(d);
        size.push(n as f64);
    }
    let ci = dur.ci(CI_CONFIDENCE)?;
    Ok(DurationStats {
        reps,
        mean: ci.mean,
        variance: dur.variance(),
        std_error: ci.std_error,
        ci_half_width: ci.half_width,
        mean_size: size.mean,
    })
}
