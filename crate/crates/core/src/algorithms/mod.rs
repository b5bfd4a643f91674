//! Algorithm engines as deterministic state machines.
//!
//! Each engine owns its learner and server state and is advanced one round
//! (or block, or update) at a time by the harness. Learners are processed in
//! index order; every compression draws from a stream keyed by
//! `(seed, entity, round, step)`.

mod dftcl;
mod dftfcl;
mod o2b;

pub use dftcl::{Dftcl, RoundOutcome};
pub use dftfcl::{BlockEnd, Dftfcl, DftfclRoundOutcome};
pub use o2b::{surrogate_value, O2b, O2bOutcome, Weights};

use crate::domains::{ftrl_linear_step, ftrl_strongly_convex_step, FeasibleSet};
use crate::error::{Error, Result};
use crate::vector::DecisionVector;

/// Which FTRL objective drives the decision update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mode {
    /// Linear FTRL with regularizer `||w||^2 / eta`.
    Convex { eta: f64 },
    /// Strongly convex FTRL anchored at past decisions.
    StronglyConvex { mu: f64 },
}

impl Mode {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Mode::Convex { eta } if !(eta > 0.0 && eta.is_finite()) => {
                Err(Error::config("eta", format!("must be positive, got {eta}")))
            }
            Mode::StronglyConvex { mu } if !(mu > 0.0 && mu.is_finite()) => {
                Err(Error::config("mu", format!("must be positive, got {mu}")))
            }
            _ => Ok(()),
        }
    }

    pub fn is_strongly_convex(&self) -> bool {
        matches!(self, Mode::StronglyConvex { .. })
    }
}

/// Per-learner error-feedback state.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnerState {
    /// Error memory `e_i`, the compression residual not yet transmitted.
    pub error: DecisionVector,
}

impl LearnerState {
    pub fn new(dim: usize) -> Self {
        LearnerState {
            error: DecisionVector::zeros(dim),
        }
    }
}

/// Server-side error-feedback state.
#[derive(Debug, Clone, PartialEq)]
pub struct ServerState {
    /// Error memory `ê`.
    pub error: DecisionVector,
    /// Sum of everything broadcast so far, `sum_k s^k`.
    pub broadcast_sum: DecisionVector,
}

impl ServerState {
    pub fn new(dim: usize) -> Self {
        ServerState {
            error: DecisionVector::zeros(dim),
            broadcast_sum: DecisionVector::zeros(dim),
        }
    }
}

/// Communication charged in one round.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Comms {
    pub bits_up: u64,
    pub bits_down: u64,
    /// Learner to server messages sent.
    pub messages_up: u64,
    /// Server to learner messages sent, counted per recipient.
    pub messages_down: u64,
}

impl std::ops::AddAssign for Comms {
    fn add_assign(&mut self, o: Comms) {
        self.bits_up += o.bits_up;
        self.bits_down += o.bits_down;
        self.messages_up += o.messages_up;
        self.messages_down += o.messages_down;
    }
}

/// Anchors for the strongly convex objective, stored as a weighted sum.
#[derive(Debug, Clone)]
struct Anchors {
    weighted_sum: DecisionVector,
    weight_total: f64,
}

impl Anchors {
    fn new(dim: usize) -> Self {
        Anchors {
            weighted_sum: DecisionVector::zeros(dim),
            weight_total: 0.0,
        }
    }

    fn push(&mut self, weight: f64, anchor: &[f64]) {
        self.weighted_sum.axpy(weight, anchor);
        self.weight_total += weight;
    }
}

/// Next decision from the cumulative broadcast sum.
fn ftrl_update(set: &FeasibleSet, mode: Mode, s_cum: &[f64], anchors: &Anchors) -> DecisionVector {
    let out = match mode {
        Mode::Convex { eta } => ftrl_linear_step(set, s_cum, eta),
        Mode::StronglyConvex { mu } => {
            ftrl_strongly_convex_step(set, s_cum, &anchors.weighted_sum, mu, anchors.weight_total)
        }
    };
    out.expect("engine parameters are validated at construction")
}

fn check_dims(set: &FeasibleSet, n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::config("n", "need at least one learner"));
    }
    if set.dim() == 0 {
        return Err(Error::config("d", "dimension must be at least 1"));
    }
    Ok(())
}
