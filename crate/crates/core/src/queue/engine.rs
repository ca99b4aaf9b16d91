//! Discrete-event M/Hawkes/κ+M simulation.
//!
//! Poisson arrivals wait FCFS in an unbounded room with exponential
//! patience; up to `κ` conversations run at once. The agent's synchronicity
//! is `1/h(K)` for the current concurrency `K`. Whenever `K` changes, every
//! running conversation is brought up to date under the old synchronicity and
//! its next event is redrawn under the new one; by memorylessness of the
//! Poisson reply streams this is exact. Superseded events stay in the heap and
//! are skipped through a per-conversation generation counter.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use rand::Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::conversation::{ConversationEvent, ConversationModel, HawkesConversation};
use super::params::{check_stability_quad, QuadParams};
use crate::cluster::Side;
use crate::error::{Error, Result};
use crate::kernels::SlowdownSpec;
use crate::rng::{RngStream, SimRng};
use crate::stats::RunningStats;

const MODULE: &str = "queue-sim";

/// Per-replication event budget.
pub const MAX_EVENTS: u64 = 100_000_000;
/// Confidence level of the metric intervals.
pub const METRIC_CONFIDENCE: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct QueueConfig {
    pub arrival_rate: f64,
    pub patience_rate: f64,
    pub max_concurrency: usize,
    pub closure_target: f64,
    pub slowdown: SlowdownSpec,
    pub quad: QuadParams,
    pub horizon: f64,
    pub replications: usize,
    pub seed: u64,
}

impl QueueConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::domain(MODULE, msg));
        if !(self.arrival_rate.is_finite() && self.arrival_rate > 0.0) {
            return fail(format!("arrival rate must be > 0, got {}", self.arrival_rate));
        }
        if !(self.patience_rate.is_finite() && self.patience_rate >= 0.0) {
            return fail(format!("patience rate must be >= 0, got {}", self.patience_rate));
        }
        if self.max_concurrency < 1 {
            return fail("max concurrency must be >= 1".into());
        }
        if !(self.closure_target > 0.0 && self.closure_target < 1.0) {
            return fail(format!("closure target must lie in (0, 1), got {}", self.closure_target));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return fail(format!("horizon must be > 0, got {}", self.horizon));
        }
        if self.replications < 2 {
            return fail(format!("need at least 2 replications, got {}", self.replications));
        }
        let radius = check_stability_quad(&self.quad);
        if !(radius < 1.0) {
            return Err(Error::stability(
                MODULE,
                format!("spectral radius of the responsiveness matrix must be < 1, got {radius}"),
            ));
        }
        Ok(())
    }
}

/// Counts at the horizon of one replication.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ReplicationCounts {
    pub arrivals: u64,
    pub completions: u64,
    pub abandonments: u64,
    pub waiting: u64,
    pub in_service: u64,
}

impl ReplicationCounts {
    pub fn conserved(&self) -> bool {
        self.arrivals == self.completions + self.abandonments + self.waiting + self.in_service
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ReplicationOutcome {
    pub counts: ReplicationCounts,
    /// Time-average number of running conversations.
    pub occupancy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum EventKind {
    Arrival,
    Admission,
    CustomerContribution,
    AgentContribution,
    Completion,
    Abandonment,
}

impl EventKind {
    pub fn label(&self) -> &'static str {
        match self {
            EventKind::Arrival => "arrival",
            EventKind::Admission => "admission",
            EventKind::CustomerContribution => "contribution1",
            EventKind::AgentContribution => "contribution2",
            EventKind::Completion => "completion",
            EventKind::Abandonment => "abandonment",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EventRecord {
    pub replication: u64,
    pub time: f64,
    pub event: EventKind,
    pub conversation: u64,
}

#[derive(Debug, Clone, Copy)]
enum Pending {
    Arrival,
    Abandon(u64),
    Conversation { slot: usize, generation: u64, what: ConversationEvent },
}

#[derive(Debug, Clone, Copy)]
struct Scheduled {
    time: f64,
    seq: u64,
    what: Pending,
}

impl PartialEq for Scheduled {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Scheduled {}
impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Scheduled {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        other.time.total_cmp(&self.time).then(other.seq.cmp(&self.seq))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Waiting,
    Gone,
}

struct Running<S> {
    customer: u64,
    state: S,
    since: f64,
    generation: u64,
}

/// Queue parameters the engine needs, independent of the conversation model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngineParams {
    pub arrival_rate: f64,
    pub patience_rate: f64,
    pub max_concurrency: usize,
    pub slowdown: SlowdownSpec,
    pub horizon: f64,
}

impl From<&QueueConfig> for EngineParams {
    fn from(c: &QueueConfig) -> Self {
        Self {
            arrival_rate: c.arrival_rate,
            patience_rate: c.patience_rate,
            max_concurrency: c.max_concurrency,
            slowdown: c.slowdown,
            horizon: c.horizon,
        }
    }
}

struct Engine<'a, M: ConversationModel> {
    model: &'a M,
    p: EngineParams,
    /// Synchronicity at each concurrency `0..=κ`; an idle agent has 1.
    etas: Vec<f64>,
    rng: SimRng,
    heap: BinaryHeap<Scheduled>,
    seq: u64,
    now: f64,
    running: Vec<Option<Running<M::State>>>,
    active: usize,
    queue: VecDeque<u64>,
    status: Vec<Status>,
    counts: ReplicationCounts,
    area: f64,
    replication: u64,
    log: Option<Vec<EventRecord>>,
}

impl<'a, M: ConversationModel> Engine<'a, M> {
    fn eta(&self, k: usize) -> f64 {
        self.etas[k]
    }

    fn push(&mut self, time: f64, what: Pending) {
        self.seq += 1;
        self.heap.push(Scheduled { time, seq: self.seq, what });
    }

    fn record(&mut self, event: EventKind, conversation: u64) {
        if let Some(log) = self.log.as_mut() {
            log.push(EventRecord {
                replication: self.replication,
                time: self.now,
                event,
                conversation,
            });
        }
    }

    fn schedule(&mut self, slot: usize, eta: f64) {
        let run = self.running[slot].as_mut().expect("occupied slot");
        run.generation += 1;
        let generation = run.generation;
        let (dt, what) = self.model.next_event(&run.state, eta, &mut self.rng);
        self.push(self.now + dt, Pending::Conversation { slot, generation, what });
    }

    /// Bring every running conversation to `now` under `old_eta` and redraw
    /// its next event under `new_eta`.
    fn resample_all(&mut self, old_eta: f64, new_eta: f64) {
        for slot in 0..self.running.len() {
            if let Some(run) = self.running[slot].as_mut() {
                self.model.advance(&mut run.state, self.now - run.since, old_eta);
                run.since = self.now;
                self.schedule(slot, new_eta);
            }
        }
    }

    fn admit(&mut self, customer: u64, rebalance: bool) {
        let old_eta = self.eta(self.active);
        if rebalance {
            self.active += 1;
            self.resample_all(old_eta, self.eta(self.active));
        }
        let slot = self.running.iter().position(Option::is_none).expect("free slot below capacity");
        self.running[slot] = Some(Running {
            customer,
            state: self.model.start(),
            since: self.now,
            generation: 0,
        });
        self.status[customer as usize] = Status::Gone;
        self.record(EventKind::Admission, customer);
        self.schedule(slot, self.eta(self.active));
    }

    fn next_waiting(&mut self) -> Option<u64> {
        while let Some(c) = self.queue.pop_front() {
            if self.status[c as usize] == Status::Waiting {
                return Some(c);
            }
        }
        None
    }

    fn run(mut self) -> Result<(ReplicationOutcome, Option<Vec<EventRecord>>)> {
        let arrival = Exp::new(self.p.arrival_rate).map_err(|e| Error::domain(MODULE, e.to_string()))?;
        let patience = if self.p.patience_rate > 0.0 {
            Some(Exp::new(self.p.patience_rate).map_err(|e| Error::domain(MODULE, e.to_string()))?)
        } else {
            None
        };
        let first = arrival.sample(&mut self.rng);
        self.push(first, Pending::Arrival);
        let mut last = 0.0;
        let mut events: u64 = 0;
        while let Some(ev) = self.heap.pop() {
            if ev.time > self.p.horizon {
                break;
            }
            if let Pending::Conversation { slot, generation, .. } = ev.what {
                if self.running[slot].as_ref().is_none_or(|r| r.generation != generation) {
                    continue;
                }
            }
            events += 1;
            if events > MAX_EVENTS {
                return Err(Error::divergence(MODULE, format!("replication exceeded {MAX_EVENTS} events")));
            }
            self.area += self.active as f64 * (ev.time - last);
            last = ev.time;
            self.now = ev.time;
            match ev.what {
                Pending::Arrival => {
                    let id = self.counts.arrivals;
                    self.counts.arrivals += 1;
                    self.status.push(Status::Waiting);
                    self.record(EventKind::Arrival, id);
                    let gap = arrival.sample(&mut self.rng);
                    self.push(self.now + gap, Pending::Arrival);
                    if self.active < self.p.max_concurrency {
                        self.admit(id, true);
                    } else {
                        self.queue.push_back(id);
                        if let Some(pat) = patience {
                            let d = pat.sample(&mut self.rng);
                            self.push(self.now + d, Pending::Abandon(id));
                        }
                    }
                }
                Pending::Abandon(id) => {
                    if self.status[id as usize] == Status::Waiting {
                        self.status[id as usize] = Status::Gone;
                        self.counts.abandonments += 1;
                        self.record(EventKind::Abandonment, id);
                    }
                }
                Pending::Conversation { slot, what, .. } => {
                    let eta = self.eta(self.active);
                    let run = self.running[slot].as_mut().expect("live slot");
                    self.model.advance(&mut run.state, self.now - run.since, eta);
                    run.since = self.now;
                    let customer = run.customer;
                    match what {
                        ConversationEvent::Contribution(side) => {
                            self.model.contribute(&mut run.state, side);
                            let kind = if side == Side::Two {
                                EventKind::AgentContribution
                            } else {
                                EventKind::CustomerContribution
                            };
                            self.record(kind, customer);
                            self.schedule(slot, eta);
                        }
                        ConversationEvent::Close => {
                            self.running[slot] = None;
                            self.counts.completions += 1;
                            self.record(EventKind::Completion, customer);
                            match self.next_waiting() {
                                // concurrency is unchanged, so nobody else is redrawn
                                Some(next) => self.admit(next, false),
                                None => {
                                    self.active -= 1;
                                    let new_eta = self.eta(self.active);
                                    self.resample_all(eta, new_eta);
                                }
                            }
                        }
                    }
                }
            }
        }
        self.area += self.active as f64 * (self.p.horizon - last);
        self.counts.in_service = self.active as u64;
        self.counts.waiting = self.status.iter().filter(|s| **s == Status::Waiting).count() as u64;
        if !self.counts.conserved() {
            return Err(Error::invariant(MODULE, format!("customer flow not conserved: {:?}", self.counts)));
        }
        Ok((
            ReplicationOutcome {
                counts: self.counts,
                occupancy: self.area / self.p.horizon,
            },
            self.log,
        ))
    }
}

/// One replication of the queue driven by `model`.
pub fn run_replication<M: ConversationModel>(
    model: &M,
    params: &EngineParams,
    rng: SimRng,
    replication: u64,
    log: bool,
) -> Result<(ReplicationOutcome, Vec<EventRecord>)> {
    let etas = std::iter::once(Ok(1.0))
        .chain((1..=params.max_concurrency).map(|k| params.slowdown.synchronicity(k as f64)))
        .collect::<Result<Vec<f64>>>()?;
    let engine = Engine {
        model,
        p: *params,
        etas,
        rng,
        heap: BinaryHeap::new(),
        seq: 0,
        now: 0.0,
        running: (0..params.max_concurrency).map(|_| None).collect(),
        active: 0,
        queue: VecDeque::new(),
        status: Vec::new(),
        counts: ReplicationCounts::default(),
        area: 0.0,
        replication,
        log: log.then(Vec::new),
    };
    let (out, log) = engine.run()?;
    Ok((out, log.unwrap_or_default()))
}

/// Replication averages with normal-approximation half-widths at
/// [`METRIC_CONFIDENCE`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct QueueMetrics {
    pub replications: usize,
    /// Completions per unit time.
    pub throughput: f64,
    pub throughput_ci: f64,
    /// Abandonments per unit time.
    pub abandon_rate: f64,
    pub abandon_ci: f64,
    /// Time-average concurrency.
    pub occupancy: f64,
    pub mean_arrivals: f64,
    pub mean_completions: f64,
    pub mean_abandonments: f64,
    pub mean_in_system: f64,
}

/// Run `config.replications` independent replications of the queue with an
/// arbitrary conversation model; replication `r` uses stream `r` of the
/// configured seed.
pub fn simulate_queue_with<M: ConversationModel>(
    model: &M,
    config: &QueueConfig,
    log: bool,
) -> Result<(QueueMetrics, Vec<EventRecord>)> {
    config.validate()?;
    let params = EngineParams::from(config);
    let base = RngStream::new(config.seed);
    let runs: Vec<(ReplicationOutcome, Vec<EventRecord>)> = (0..config.replications as u64)
        .into_par_iter()
        .map(|r| run_replication(model, &params, base.at(r).rng(), r, log))
        .collect::<Result<_>>()?;
    let mut stats = [RunningStats::default(); 3];
    let mut totals = [0u64; 4];
    for (o, _) in &runs {
        stats[0].push(o.counts.completions as f64 / config.horizon);
        stats[1].push(o.counts.abandonments as f64 / config.horizon);
        stats[2].push(o.occupancy);
        totals[0] += o.counts.arrivals;
        totals[1] += o.counts.completions;
        totals[2] += o.counts.abandonments;
        totals[3] += o.counts.waiting + o.counts.in_service;
    }
    let n = config.replications as f64;
    let tp = stats[0].ci(METRIC_CONFIDENCE)?;
    let ab = stats[1].ci(METRIC_CONFIDENCE)?;
    let metrics = QueueMetrics {
        replications: config.replications,
        throughput: tp.mean,
        throughput_ci: tp.half_width,
        abandon_rate: ab.mean,
        abandon_ci: ab.half_width,
        occupancy: stats[2].mean,
        mean_arrivals: totals[0] as f64 / n,
        mean_completions: totals[1] as f64 / n,
        mean_abandonments: totals[2] as f64 / n,
        mean_in_system: totals[3] as f64 / n,
    };
    let events = runs.into_iter().flat_map(|(_, l)| l).collect();
    Ok((metrics, events))
}

/// The M/Hawkes/κ+M queue with systematic closure.
pub fn simulate_queue(config: &QueueConfig) -> Result<QueueMetrics> {
    simulate_queue_logged(config, false).map(|(m, _)| m)
}

/// As [`simulate_queue`], optionally keeping the per-event log.
pub fn simulate_queue_logged(config: &QueueConfig, log: bool) -> Result<(QueueMetrics, Vec<EventRecord>)> {
    config.validate()?;
    let model = HawkesConversation::new(config.quad, config.closure_target)?;
    simulate_queue_with(&model, config, log)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct KappaCell {
    pub sigma: f64,
    pub kappa: usize,
    pub metrics: Option<QueueMetrics>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct KappaSweep {
    pub cells: Vec<KappaCell>,
}

impl KappaSweep {
    /// Cells for one slowdown exponent, in κ order.
    pub fn for_sigma(&self, sigma: f64) -> Vec<&KappaCell> {
        self.cells.iter().filter(|c| c.sigma == sigma).collect()
    }

    fn arg_by(&self, sigma: f64, key: impl Fn(&QueueMetrics) -> f64, max: bool) -> Option<usize> {
        let cells = self.for_sigma(sigma);
        let scored = cells.iter().filter_map(|c| c.metrics.as_ref().map(|m| (c.kappa, key(m))));
        if max {
            scored.max_by(|a, b| a.1.total_cmp(&b.1)).map(|(k, _)| k)
        } else {
            scored.min_by(|a, b| a.1.total_cmp(&b.1)).map(|(k, _)| k)
        }
    }

    /// κ with the largest throughput at `sigma`.
    pub fn argmax_throughput(&self, sigma: f64) -> Option<usize> {
        self.arg_by(sigma, |m| m.throughput, true)
    }

    /// κ with the smallest abandonment rate at `sigma`.
    pub fn argmin_abandonment(&self, sigma: f64) -> Option<usize> {
        self.arg_by(sigma, |m| m.abandon_rate, false)
    }
}

/// Full factorial over `sigmas × kappas`. Every cell reuses the template's
/// seed, so cells share random streams; a failing cell is recorded and the
/// sweep continues.
pub fn sweep_kappa(template: &QueueConfig, kappas: &[usize], sigmas: &[f64]) -> Result<KappaSweep> {
    if kappas.is_empty() || sigmas.is_empty() {
        return Err(Error::domain(MODULE, "kappa and sigma grids must be non-empty"));
    }
    let mut cells = Vec::with_capacity(kappas.len() * sigmas.len());
    for &sigma in sigmas {
        for &kappa in kappas {
            let run = || -> Result<QueueMetrics> {
                let cfg = QueueConfig {
                    max_concurrency: kappa,
                    slowdown: SlowdownSpec::polynomial(sigma)?,
                    ..*template
                };
                simulate_queue(&cfg)
            };
            let (metrics, error) = match run() {
                Ok(m) => (Some(m), None),
                Err(e) => (None, Some(e.to_string())),
            };
            cells.push(KappaCell {
                sigma,
                kappa,
                metrics,
                error,
            });
        }
    }
    Ok(KappaSweep { cells })
}

/// Virtual-waiting-time reference for one server with deterministic service
/// `d` and exponential patience: a customer is served iff the remaining
/// work in the system at its arrival is below its patience. Returns
/// `(completions by the horizon, abandonments by the horizon, arrivals)`.
pub fn md1_reference<R: Rng + ?Sized>(
    arrival_rate: f64,
    patience_rate: f64,
    duration: f64,
    horizon: f64,
    rng: &mut R,
) -> (u64, u64, u64) {
    let arrival = Exp::new(arrival_rate).expect("positive rate");
    let patience = Exp::new(patience_rate).expect("positive rate");
    let mut t = 0.0;
    let mut free_at: f64 = 0.0;
    let (mut done, mut gone, mut n) = (0, 0, 0);
    loop {
        t += arrival.sample(rng);
        if t > horizon {
            break;
        }
        n += 1;
        let wait = (free_at - t).max(0.0);
        let limit: f64 = if wait > 0.0 { patience.sample(rng) } else { f64::INFINITY };
        if wait < limit {
            free_at = t + wait + duration;
            if free_at <= horizon {
                done += 1;
            }
        } else if t + limit <= horizon {
            gone += 1;
        }
    }
    (done, gone, n)
}
