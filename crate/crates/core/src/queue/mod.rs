//! The M/Hawkes/κ+M queue: Poisson arrivals, exponential patience and up to
//! `κ` concurrent conversations driven by a four-kernel Hawkes process.

mod conversation;
mod engine;
mod params;

pub use conversation::{
    simulate_quad_cluster, ConversationEvent, ConversationModel, FixedDuration, HawkesConversation, QuadState,
};
pub use engine::{
    md1_reference, run_replication, simulate_queue, simulate_queue_logged, simulate_queue_with, sweep_kappa,
    EngineParams, EventKind, EventRecord, KappaCell, KappaSweep, QueueConfig, QueueMetrics, ReplicationCounts,
    ReplicationOutcome, MAX_EVENTS, METRIC_CONFIDENCE,
};
pub use params::{check_stability_quad, expected_size_quad, Preset, QuadParams, MODERATE_CO_ALPHAS, PRESET_BETAS};
