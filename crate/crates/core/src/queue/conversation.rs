//! Conversation dynamics inside the queue.
//!
//! A conversation keeps the four excitation levels `S_xy` (side `x`
//! responding to side `y`). Side-1 levels decay at `β_xy` in real time; side-2
//! levels decay at `β_xy η` because the agent runs in operational time, and
//! the side-2 intensity is `η (S_21 + S_22)`. The residual reply mass
//! `R = Σ S_xy / β_xy` does not depend on `η`.
//!
//! Each direction is an independent Poisson stream with a deterministic
//! intensity until the next state change, so its next point is drawn by exact
//! inversion: with mass `m = S/β` left, an `Exp(1)` draw `E < m` gives the
//! time `-ln(1 - E/m) / b`, otherwise the direction is silent.

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use super::params::{check_stability_quad, QuadParams};
use crate::cluster::{ClusterRecord, Side, MAX_CLUSTER_POINTS};
use crate::error::{Error, Result};

const MODULE: &str = "queue-sim";

/// What a conversation does next.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConversationEvent {
    Contribution(Side),
    Close,
}

/// Per-conversation dynamics driven by the queue's event engine.
pub trait ConversationModel: Sync {
    type State: Send;

    /// State at admission.
    fn start(&self) -> Self::State;

    /// Let `dt` pass with the agent at synchronicity `eta`.
    fn advance(&self, state: &mut Self::State, dt: f64, eta: f64);

    /// Time until the next event and the event, assuming `eta` stays fixed.
    fn next_event<R: Rng + ?Sized>(&self, state: &Self::State, eta: f64, rng: &mut R) -> (f64, ConversationEvent);

    fn contribute(&self, state: &mut Self::State, side: Side);
}

/// Excitation levels `S_xy`, order `(11, 12, 21, 22)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadState {
    pub levels: [f64; 4],
}

#[inline]
fn responder(c: usize) -> Side {
    if c < 2 {
        Side::One
    } else {
        Side::Two
    }
}

/// Quad-directional Hawkes conversation, closed once the probability of no
/// further contribution reaches `closure_target`.
#[derive(Debug, Clone, PartialEq)]
pub struct HawkesConversation {
    quad: QuadParams,
    alpha: [f64; 4],
    beta: [f64; 4],
    /// Close when `R <= -ln p`.
    residual_threshold: f64,
    closure_target: f64,
}

impl HawkesConversation {
    pub fn new(quad: QuadParams, closure_target: f64) -> Result<Self> {
        if !(closure_target > 0.0 && closure_target < 1.0) {
            return Err(Error::domain(
                MODULE,
                format!("closure target must lie in (0, 1), got p = {closure_target}"),
            ));
        }
        let radius = check_stability_quad(&quad);
        if !(radius < 1.0) {
            return Err(Error::stability(
                MODULE,
                format!("spectral radius of the responsiveness matrix must be < 1, got {radius}"),
            ));
        }
        let ab = quad.alpha_beta();
        Ok(Self {
            quad,
            alpha: ab.map(|(a, _)| a),
            beta: ab.map(|(_, b)| b),
            residual_threshold: -closure_target.ln(),
            closure_target,
        })
    }

    pub fn quad(&self) -> &QuadParams {
        &self.quad
    }

    pub fn closure_target(&self) -> f64 {
        self.closure_target
    }

    #[inline]
    fn decay(&self, c: usize, eta: f64) -> f64 {
        if c < 2 {
            self.beta[c]
        } else {
            self.beta[c] * eta
        }
    }

    /// Residual reply mass `R` after a further `dt` at synchronicity `eta`.
    pub fn residual_mass(&self, state: &QuadState, dt: f64, eta: f64) -> f64 {
        (0..4)
            .map(|c| state.levels[c] / self.beta[c] * (-self.decay(c, eta) * dt).exp())
            .sum()
    }

    /// Probability of no further contribution, `exp(-R)`, after a further
    /// `dt` with no contribution in between.
    pub fn closure_probability(&self, state: &QuadState, dt: f64, eta: f64) -> f64 {
        (-self.residual_mass(state, dt, eta)).exp()
    }

    /// First time the closure probability reaches the target, ignoring
    /// future contributions.
    pub fn closure_time(&self, state: &QuadState, eta: f64) -> f64 {
        let target = self.residual_threshold;
        let r0 = self.residual_mass(state, 0.0, eta);
        if r0 <= target {
            return 0.0;
        }
        // R is a positive combination of decaying exponentials, hence convex
        // and decreasing: Newton from the left increases monotonically to the
        // root.
        let mut t = 0.0;
        for _ in 0..200 {
            let (mut r, mut dr) = (0.0, 0.0);
            for c in 0..4 {
                let b = self.decay(c, eta);
                let term = state.levels[c] / self.beta[c] * (-b * t).exp();
                r += term;
                dr -= b * term;
            }
            let gap = r - target;
            if gap <= target * 1e-14 || dr == 0.0 {
                break;
            }
            let step = -gap / dr;
            t += step;
            if step <= t * 1e-15 {
                break;
            }
        }
        t
    }

    /// Next contribution ignoring closure, or `None` if every direction is
    /// silent from here on.
    pub fn next_contribution<R: Rng + ?Sized>(&self, state: &QuadState, eta: f64, rng: &mut R) -> Option<(f64, Side)> {
        let mut best: Option<(f64, Side)> = None;
        for c in 0..4 {
            let s = state.levels[c];
            if !(s > 0.0) {
                continue;
            }
            let mass = s / self.beta[c];
            let e: f64 = Exp1.sample(rng);
            if e < mass {
                let t = -(-e / mass).ln_1p() / self.decay(c, eta);
                if best.is_none_or(|(bt, _)| t < bt) {
                    best = Some((t, responder(c)));
                }
            }
        }
        best
    }
}

impl ConversationModel for HawkesConversation {
    type State = QuadState;

    /// A customer contribution at admission.
    fn start(&self) -> QuadState {
        let mut s = QuadState { levels: [0.0; 4] };
        self.contribute(&mut s, Side::One);
        s
    }

    fn advance(&self, state: &mut QuadState, dt: f64, eta: f64) {
        if dt > 0.0 {
            for c in 0..4 {
                state.levels[c] *= (-self.decay(c, eta) * dt).exp();
            }
        }
    }

    fn next_event<R: Rng + ?Sized>(&self, state: &QuadState, eta: f64, rng: &mut R) -> (f64, ConversationEvent) {
        match self.next_contribution(state, eta, rng) {
            // R only falls between contributions, so closure comes first iff
            // R has reached the threshold by the contribution time
            Some((t, side)) if self.residual_mass(state, t, eta) > self.residual_threshold => {
                (t, ConversationEvent::Contribution(side))
            }
            _ => (self.closure_time(state, eta), ConversationEvent::Close),
        }
    }

    fn contribute(&self, state: &mut QuadState, side: Side) {
        let y = match side {
            Side::Two => 1,
            _ => 0,
        };
        state.levels[y] += self.alpha[y];
        state.levels[2 + y] += self.alpha[2 + y];
    }
}

/// Test double: every conversation lasts exactly `duration`, whatever the
/// concurrency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedDuration {
    pub duration: f64,
}

impl ConversationModel for FixedDuration {
    type State = f64;

    fn start(&self) -> f64 {
        self.duration
    }

    fn advance(&self, state: &mut f64, dt: f64, _eta: f64) {
        *state -= dt;
    }

    fn next_event<R: Rng + ?Sized>(&self, state: &f64, _eta: f64, _rng: &mut R) -> (f64, ConversationEvent) {
        (state.max(0.0), ConversationEvent::Close)
    }

    fn contribute(&self, _state: &mut f64, _side: Side) {}
}

/// A customer-initiated quad-directional cluster at fixed synchronicity `eta`,
/// run to its natural end (the last contribution). Parents are attributed in
/// proportion to each earlier point's current excitation of the responding
/// direction.
pub fn simulate_quad_cluster<R: Rng + ?Sized>(quad: &QuadParams, eta: f64, rng: &mut R) -> Result<ClusterRecord> {
    if !(eta.is_finite() && eta > 0.0) {
        return Err(Error::domain(MODULE, format!("synchronicity must be > 0, got eta = {eta}")));
    }
    // any closure target works: only the contribution streams are used
    let model = HawkesConversation::new(*quad, 0.5)?;
    let mut state = model.start();
    let mut rec = ClusterRecord::singleton(1.0);
    let mut source_side = vec![0usize];
    let mut t = 0.0;
    while let Some((dt, side)) = model.next_contribution(&state, eta, rng) {
        model.advance(&mut state, dt, eta);
        t += dt;
        let x = if side == Side::One { 0 } else { 1 };
        // direction (x, y) for each earlier point of side y
        let weights: Vec<f64> = rec
            .epochs
            .iter()
            .zip(&source_side)
            .map(|(&e, &y)| {
                let c = 2 * x + y;
                model.alpha[c] * (-model.decay(c, eta) * (t - e)).exp()
            })
            .collect();
        let total: f64 = weights.iter().sum();
        let mut u = rng.random::<f64>() * total;
        let mut parent = weights.len() - 1;
        for (i, w) in weights.iter().enumerate() {
            if u < *w {
                parent = i;
                break;
            }
            u -= w;
        }
        model.contribute(&mut state, side);
        rec.epochs.push(t);
        rec.sides.push(side);
        rec.parents.push(Some(parent));
        rec.marks.push(1.0);
        source_side.push(x);
        if rec.size() > MAX_CLUSTER_POINTS {
            return Err(Error::divergence(MODULE, format!("cluster exceeded {MAX_CLUSTER_POINTS} points")));
        }
    }
    debug_assert!(rec.check_invariants().is_ok());
    Ok(rec)
}
