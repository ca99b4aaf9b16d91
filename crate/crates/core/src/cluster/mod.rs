//! Cluster samplers for the two-sided and marked Hawkes service models.
//!
//! Two families of samplers produce the same laws:
//!
//! * intensity-based: [`simulate_cluster_thinning`] and
//!   [`simulate_marked_thinning`] run forward in time;
//! * end-state conditioned: [`simulate_cluster_parking`],
//!   [`simulate_dyck_cluster`] and [`simulate_exp_marked_conditional`] first
//!   draw the size and the reply tree, then the times.
//!
//! [`simulate_asynchrony_limit`] gives the durations when one side replies
//! instantaneously.

mod duration;
mod marked;
mod parking;
mod record;
mod thinning;

pub use duration::{estimate_duration_stats, DurationSampler, DurationStats, CI_CONFIDENCE};
pub use marked::{
    exp_marked_rates, exp_marked_rates_alternate, simulate_dyck_cluster, simulate_exp_marked_conditional,
    simulate_marked_thinning, DyckOverflow, MarkLaw, MarkedParams,
};
pub use parking::{simulate_asynchrony_limit, simulate_cluster_parking, simulate_cluster_parking_traced};
pub use record::{ClusterRecord, Side};
pub use thinning::simulate_cluster_thinning;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::ResponseKernel;

const MODULE: &str = "cluster-sim";

/// Clusters with more points than this are reported as divergent.
pub const MAX_CLUSTER_POINTS: usize = 1_000_000;

/// Residual reply mass below which a forward sampler stops proposing.
pub(crate) const TAIL_CUTOFF: f64 = 1e-13;

/// The customer (side 1) and agent (side 2) kernels plus the agent's
/// synchronicity `eta`.
///
/// `eta` rescales side-2 offsets at sampling time (`Δ → Δ / eta`); the stored
/// kernels never change, so the side masses are `eta`-free.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InteractionParams {
    pub g1: ResponseKernel,
    pub g2: ResponseKernel,
    pub eta: f64,
}

impl InteractionParams {
    pub fn new(g1: ResponseKernel, g2: ResponseKernel, eta: f64) -> Result<Self> {
        let p = Self { g1, g2, eta };
        p.validate()?;
        Ok(p)
    }

    /// Symmetric-shape exponential pair with the given side masses.
    pub fn exponential(rho1: f64, rho2: f64, beta1: f64, beta2: f64, eta: f64) -> Result<Self> {
        Self::new(
            ResponseKernel::exponential_with_mass(rho1, beta1)?,
            ResponseKernel::exponential_with_mass(rho2, beta2)?,
            eta,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta.is_finite() && self.eta > 0.0) {
            return Err(Error::domain(MODULE, format!("synchronicity must be > 0, got eta = {}", self.eta)));
        }
        let rho = self.rho();
        if !(rho < 1.0) {
            return Err(Error::stability(
                MODULE,
                format!("total reply mass rho1 + rho2 must be < 1, got {rho}"),
            ));
        }
        Ok(())
    }

    pub fn rho1(&self) -> f64 {
        self.g1.mass()
    }

    pub fn rho2(&self) -> f64 {
        self.g2.mass()
    }

    pub fn rho(&self) -> f64 {
        self.rho1() + self.rho2()
    }

    pub fn with_eta(&self, eta: f64) -> Result<Self> {
        Self::new(self.g1, self.g2, eta)
    }
}
