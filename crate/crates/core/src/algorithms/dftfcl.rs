//! D-FTFCL: blocked FTRL whose FCC transfers are spread over the rounds of a block.
//!
//! During block `b` the decision `w^b` is frozen for `L` rounds. The uplink FCC
//! of `e_i^{b-1} + z_i^{b-1}` and the downlink FCC of `v^{b-2} + ê^{b-2}` each
//! advance one compression step per round, so every learner sends and receives
//! at most one message per round. A transfer is consumed only once all `L`
//! steps are done, which gives the two-block information delay: at the end of
//! block `b >= 3` the learners hold `s^1, ..., s^{b-2}`.

use super::{check_dims, ftrl_update, Anchors, Comms, LearnerState, Mode, ServerState};
use crate::compressors::{CompressorSpec, FccTransfer};
use crate::domains::FeasibleSet;
use crate::environments::{OnlineEnvironment, RoundLoss};
use crate::error::{Error, Result};
use crate::rng::{self, entity};
use crate::vector::{mean_of, DecisionVector};

#[derive(Debug, Clone)]
struct BlockLearner {
    state: LearnerState,
    /// `z_i^b`, the running gradient sum of the current block.
    block_sum: DecisionVector,
    /// `z_i^{b-1}`, being transmitted during this block.
    previous_sum: Option<DecisionVector>,
    uplink: Option<FccTransfer>,
}

#[derive(Debug, Clone)]
pub struct Dftfcl {
    set: FeasibleSet,
    uplink_spec: CompressorSpec,
    downlink_spec: CompressorSpec,
    block_len: usize,
    mode: Mode,
    seed: u64,
    learners: Vec<BlockLearner>,
    server: ServerState,
    /// `v^{b-1}` completed at the end of the previous block.
    aggregate_ready: Option<DecisionVector>,
    /// `v^{b-2}` whose downlink is in flight.
    aggregate_in_flight: Option<DecisionVector>,
    downlink: Option<FccTransfer>,
    anchors: Anchors,
    decision: DecisionVector,
    block: usize,
    round: usize,
    completed_broadcasts: usize,
}

/// One round of D-FTFCL.
#[derive(Debug, Clone)]
pub struct DftfclRoundOutcome {
    pub decision: DecisionVector,
    pub block: usize,
    pub comms: Comms,
    /// Set on the last round of a block.
    pub block_end: Option<BlockEnd>,
}

/// State changes applied at the end of a block.
#[derive(Debug, Clone)]
pub struct BlockEnd {
    /// `v_i^{b-1}` per learner, when an uplink completed.
    pub uplink: Option<Vec<DecisionVector>>,
    /// `s^{b-2}`, when a downlink completed.
    pub broadcast: Option<DecisionVector>,
    /// `z_i^b` per learner.
    pub block_sums: Vec<DecisionVector>,
}

impl Dftfcl {
    pub fn new(
        n: usize,
        set: FeasibleSet,
        compressor: CompressorSpec,
        block_len: usize,
        mode: Mode,
        seed: u64,
    ) -> Result<Self> {
        Self::build(n, set, compressor, compressor, block_len, mode, seed)
    }

    pub fn unidirectional(
        n: usize,
        set: FeasibleSet,
        compressor: CompressorSpec,
        block_len: usize,
        mode: Mode,
        seed: u64,
    ) -> Result<Self> {
        Self::build(
            n,
            set,
            compressor,
            CompressorSpec::Identity,
            block_len,
            mode,
            seed,
        )
    }

    fn build(
        n: usize,
        set: FeasibleSet,
        uplink_spec: CompressorSpec,
        downlink_spec: CompressorSpec,
        block_len: usize,
        mode: Mode,
        seed: u64,
    ) -> Result<Self> {
        check_dims(&set, n)?;
        mode.validate()?;
        if block_len < 1 {
            return Err(Error::config("L", "block size must be at least 1"));
        }
        uplink_spec.validate(set.dim())?;
        downlink_spec.validate(set.dim())?;
        let d = set.dim();
        Ok(Dftfcl {
            learners: (0..n)
                .map(|_| BlockLearner {
                    state: LearnerState::new(d),
                    block_sum: DecisionVector::zeros(d),
                    previous_sum: None,
                    uplink: None,
                })
                .collect(),
            server: ServerState::new(d),
            aggregate_ready: None,
            aggregate_in_flight: None,
            downlink: None,
            anchors: Anchors::new(d),
            decision: DecisionVector::zeros(d),
            block: 0,
            round: 0,
            completed_broadcasts: 0,
            set,
            uplink_spec,
            downlink_spec,
            block_len,
            mode,
            seed,
        })
    }

    pub fn decision(&self) -> &DecisionVector {
        &self.decision
    }

    pub fn block_len(&self) -> usize {
        self.block_len
    }

    pub fn blocks_started(&self) -> usize {
        self.block
    }

    pub fn rounds_played(&self) -> usize {
        self.round
    }

    pub fn server(&self) -> &ServerState {
        &self.server
    }

    /// Learner error memories `e_i`.
    pub fn learner_errors(&self) -> impl Iterator<Item = &DecisionVector> {
        self.learners.iter().map(|l| &l.state.error)
    }

    /// Number of server broadcasts `s^k` the learners have fully received.
    pub fn completed_broadcasts(&self) -> usize {
        self.completed_broadcasts
    }

    pub fn round(&mut self, env: &OnlineEnvironment) -> (Vec<RoundLoss>, DftfclRoundOutcome) {
        let t = self.round + 1;
        let losses = env.round_losses(t);
        let grads: Vec<DecisionVector> =
            losses.iter().map(|l| l.gradient(&self.decision)).collect();
        let outcome = self
            .step(&grads)
            .expect("environment matches engine dimensions");
        (losses, outcome)
    }

    /// Runs all `L` rounds of the next block against `env`.
    pub fn block(&mut self, env: &OnlineEnvironment) -> Vec<(Vec<RoundLoss>, DftfclRoundOutcome)> {
        (0..self.block_len).map(|_| self.round(env)).collect()
    }

    pub fn step(&mut self, grads: &[DecisionVector]) -> Result<DftfclRoundOutcome> {
        if grads.len() != self.learners.len() {
            return Err(Error::Input(format!(
                "expected {} gradients, got {}",
                self.learners.len(),
                grads.len()
            )));
        }
        let d = self.set.dim();
        if let Some(g) = grads.iter().find(|g| g.dim() != d) {
            return Err(Error::Dimension {
                expected: d,
                actual: g.dim(),
            });
        }
        if self.round.is_multiple_of(self.block_len) {
            self.begin_block();
        }
        self.round += 1;
        let t = self.round as u64;
        let n = self.learners.len();
        let mut comms = Comms::default();

        for (i, (learner, g)) in self.learners.iter_mut().zip(grads).enumerate() {
            learner.block_sum.add_assign(g);
            if let Some(transfer) = learner.uplink.as_mut() {
                let step = transfer.steps_done() as u64;
                let mut rng = rng::stream(
                    self.seed,
                    entity::learner(entity::LEARNER_UPLINK, i),
                    t,
                    step,
                );
                if let Some(msg) = transfer.advance(&self.uplink_spec, &mut rng) {
                    comms.bits_up += msg.bits;
                    comms.messages_up += 1;
                }
            }
        }
        if let Some(transfer) = self.downlink.as_mut() {
            let step = transfer.steps_done() as u64;
            let mut rng = rng::stream(self.seed, entity::SERVER_DOWNLINK, t, step);
            if let Some(msg) = transfer.advance(&self.downlink_spec, &mut rng) {
                comms.bits_down += msg.bits * n as u64;
                comms.messages_down += n as u64;
            }
        }

        let played = self.decision.clone();
        let block_end = if self.round.is_multiple_of(self.block_len) {
            Some(self.end_block())
        } else {
            None
        };
        Ok(DftfclRoundOutcome {
            decision: played,
            block: self.block,
            comms,
            block_end,
        })
    }

    fn begin_block(&mut self) {
        self.block += 1;
        let steps = self.block_len;
        for learner in &mut self.learners {
            if let Some(prev) = &learner.previous_sum {
                let target = learner.state.error.add(prev);
                learner.uplink = Some(FccTransfer::new(target, steps));
            }
        }
        if let Some(v) = self.aggregate_ready.take() {
            let target = self.server.error.add(&v);
            self.downlink = Some(FccTransfer::new(target, steps));
            self.aggregate_in_flight = Some(v);
        }
    }

    fn end_block(&mut self) -> BlockEnd {
        let d = self.set.dim();
        let mut uplink = None;
        if self.learners.iter().any(|l| l.uplink.is_some()) {
            let mut received = Vec::with_capacity(self.learners.len());
            for learner in &mut self.learners {
                let transfer = learner
                    .uplink
                    .take()
                    .expect("all learners transmit together");
                let v = transfer.into_residual();
                let prev = learner
                    .previous_sum
                    .as_ref()
                    .expect("uplink implies a previous block");
                learner.state.error.add_assign(prev);
                learner.state.error.sub_assign(&v);
                received.push(v);
            }
            self.aggregate_ready = Some(mean_of(d, &received));
            uplink = Some(received);
        }

        let mut broadcast = None;
        if let Some(transfer) = self.downlink.take() {
            let s = transfer.into_residual();
            let v = self
                .aggregate_in_flight
                .take()
                .expect("downlink implies an aggregate");
            self.server.error.add_assign(&v);
            self.server.error.sub_assign(&s);
            self.server.broadcast_sum.add_assign(&s);
            self.completed_broadcasts += 1;
            broadcast = Some(s);
        }

        let block_sums: Vec<DecisionVector> = self
            .learners
            .iter_mut()
            .map(|l| {
                let z = std::mem::replace(&mut l.block_sum, DecisionVector::zeros(d));
                l.previous_sum = Some(z.clone());
                z
            })
            .collect();

        let weight = self.block_len as f64;
        self.anchors.push(weight, &self.decision);
        if self.block >= 3 {
            self.decision = ftrl_update(
                &self.set,
                self.mode,
                &self.server.broadcast_sum,
                &self.anchors,
            );
        }
        BlockEnd {
            uplink,
            broadcast,
            block_sums,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grads(n: usize, d: usize, t: usize) -> Vec<DecisionVector> {
        (0..n)
            .map(|i| {
                DecisionVector::from_iter(
                    (0..d).map(|j| (((i * 7 + j * 3 + t) % 5) as f64 - 2.0) * 0.1),
                )
            })
            .collect()
    }

    #[test]
    fn warm_up_blocks_keep_origin() {
        let set = FeasibleSet::cube(3, -1.0, 1.0).unwrap();
        let mut alg = Dftfcl::new(
            2,
            set,
            CompressorSpec::RandK(2),
            4,
            Mode::Convex { eta: 0.3 },
            3,
        )
        .unwrap();
        for t in 1..=8 {
            let out = alg.step(&grads(2, 3, t)).unwrap();
            assert_eq!(out.decision.as_slice(), &[0.0; 3]);
        }
        assert_eq!(alg.decision().as_slice(), &[0.0; 3]);
        assert_eq!(alg.completed_broadcasts(), 0);
    }

    #[test]
    fn broadcasts_lag_two_blocks() {
        let set = FeasibleSet::cube(2, -1.0, 1.0).unwrap();
        let mut alg = Dftfcl::new(
            3,
            set,
            CompressorSpec::RandK(1),
            3,
            Mode::Convex { eta: 0.3 },
            3,
        )
        .unwrap();
        for t in 1..=30 {
            let out = alg.step(&grads(3, 2, t)).unwrap();
            if out.block_end.is_some() {
                assert_eq!(alg.completed_broadcasts(), out.block.saturating_sub(2));
            }
        }
    }

    #[test]
    fn at_most_one_message_per_learner_per_round() {
        let set = FeasibleSet::cube(4, -1.0, 1.0).unwrap();
        let n = 3;
        let mut alg = Dftfcl::new(
            n,
            set,
            CompressorSpec::ScaledSign,
            2,
            Mode::Convex { eta: 0.1 },
            1,
        )
        .unwrap();
        for t in 1..=20 {
            let out = alg.step(&grads(n, 4, t)).unwrap();
            assert!(out.comms.messages_up <= n as u64);
            assert!(out.comms.messages_down <= n as u64);
            if t <= 2 {
                assert_eq!(out.comms.messages_up, 0);
            }
            if t <= 4 {
                assert_eq!(out.comms.messages_down, 0);
            }
        }
    }

    #[test]
    fn rejects_zero_block() {
        let set = FeasibleSet::cube(1, -1.0, 1.0).unwrap();
        let err = Dftfcl::new(
            1,
            set,
            CompressorSpec::Identity,
            0,
            Mode::Convex { eta: 1.0 },
            0,
        )
        .unwrap_err();
        assert_eq!(err.field(), Some("L"));
    }
}
