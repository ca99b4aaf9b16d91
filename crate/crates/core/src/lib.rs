//! Simulation and analysis of two-sided Hawkes service interactions.
//!
//! * [`kernels`]: response kernels and concurrency slowdowns;
//! * [`combinatorics`]: parking functions, Dyck paths and the Borel law;
//! * [`cluster`]: cluster samplers and duration estimates;
//! * [`performance`]: throughput bounds and the optimal concurrency;
//! * [`queue`]: the multi-server queue with Hawkes conversations;
//! * [`stats`]: the goodness-of-fit tests used to cross-check samplers;
//! * [`verify`]: named suites of those checks.

pub mod cluster;
pub mod combinatorics;
pub mod error;
pub mod kernels;
pub mod performance;
pub mod queue;
pub mod rng;
pub mod stats;
pub mod verify;

pub use cluster::{ClusterRecord, InteractionParams, Side};
pub use error::{Error, Result};
pub use kernels::{ResponseKernel, SlowdownSpec};
pub use rng::{RngStream, SimRng};
