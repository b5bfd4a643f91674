//! D-FTCL: FTRL on bidirectionally compressed gradients with error feedback
//! on both the learner and the server side.

use super::{check_dims, ftrl_update, Anchors, Comms, LearnerState, Mode, ServerState};
use crate::compressors::{compress, CompressorSpec};
use crate::domains::FeasibleSet;
use crate::environments::{OnlineEnvironment, RoundLoss};
use crate::error::{Error, Result};
use crate::rng::{self, entity};
use crate::vector::{mean_of, DecisionVector};

#[derive(Debug, Clone)]
pub struct Dftcl {
    set: FeasibleSet,
    uplink: CompressorSpec,
    downlink: CompressorSpec,
    mode: Mode,
    seed: u64,
    learners: Vec<LearnerState>,
    server: ServerState,
    anchors: Anchors,
    decision: DecisionVector,
    round: usize,
}

/// Everything produced by one round.
#[derive(Debug, Clone)]
pub struct RoundOutcome {
    /// The decision `w^t` played this round.
    pub decision: DecisionVector,
    /// `v_i^t` for each learner.
    pub uplink: Vec<DecisionVector>,
    /// `v^t`, the server's average.
    pub aggregate: DecisionVector,
    /// `s^t`, the broadcast.
    pub broadcast: DecisionVector,
    pub comms: Comms,
}

impl Dftcl {
    pub fn new(
        n: usize,
        set: FeasibleSet,
        compressor: CompressorSpec,
        mode: Mode,
        seed: u64,
    ) -> Result<Self> {
        Self::build(n, set, compressor, compressor, mode, seed)
    }

    /// Learner-side compression only; the server broadcasts `v^t` uncompressed.
    pub fn unidirectional(
        n: usize,
        set: FeasibleSet,
        compressor: CompressorSpec,
        mode: Mode,
        seed: u64,
    ) -> Result<Self> {
        Self::build(n, set, compressor, CompressorSpec::Identity, mode, seed)
    }

    fn build(
        n: usize,
        set: FeasibleSet,
        uplink: CompressorSpec,
        downlink: CompressorSpec,
        mode: Mode,
        seed: u64,
    ) -> Result<Self> {
        check_dims(&set, n)?;
        mode.validate()?;
        uplink.validate(set.dim())?;
        downlink.validate(set.dim())?;
        let d = set.dim();
        Ok(Dftcl {
            learners: (0..n).map(|_| LearnerState::new(d)).collect(),
            server: ServerState::new(d),
            anchors: Anchors::new(d),
            decision: DecisionVector::zeros(d),
            round: 0,
            set,
            uplink,
            downlink,
            mode,
            seed,
        })
    }

    pub fn decision(&self) -> &DecisionVector {
        &self.decision
    }

    pub fn learners(&self) -> &[LearnerState] {
        &self.learners
    }

    pub fn server(&self) -> &ServerState {
        &self.server
    }

    pub fn rounds_played(&self) -> usize {
        self.round
    }

    pub fn set(&self) -> &FeasibleSet {
        &self.set
    }

    /// Plays `w^t`, feeds each learner's gradient at `w^t`, and returns the
    /// losses seen alongside the round outcome.
    pub fn round(&mut self, env: &OnlineEnvironment) -> (Vec<RoundLoss>, RoundOutcome) {
        let t = self.round + 1;
        let losses = env.round_losses(t);
        let grads: Vec<DecisionVector> =
            losses.iter().map(|l| l.gradient(&self.decision)).collect();
        let outcome = self
            .step(&grads)
            .expect("environment matches engine dimensions");
        (losses, outcome)
    }

    /// One round given the gradients observed at the current decision.
    pub fn step(&mut self, grads: &[DecisionVector]) -> Result<RoundOutcome> {
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
        self.round += 1;
        let t = self.round as u64;
        let n = self.learners.len();
        let mut comms = Comms::default();

        let mut uplink = Vec::with_capacity(n);
        for (i, (state, g)) in self.learners.iter_mut().zip(grads).enumerate() {
            let target = state.error.add(g);
            let mut rng = rng::stream(self.seed, entity::learner(entity::LEARNER_UPLINK, i), t, 0);
            let msg = compress(&self.uplink, &target, &mut rng);
            state.error = target.sub(&msg.payload);
            comms.bits_up += msg.bits;
            comms.messages_up += 1;
            uplink.push(msg.payload);
        }

        let aggregate = mean_of(d, &uplink);
        let target = self.server.error.add(&aggregate);
        let mut rng = rng::stream(self.seed, entity::SERVER_DOWNLINK, t, 0);
        let msg = compress(&self.downlink, &target, &mut rng);
        self.server.error = target.sub(&msg.payload);
        self.server.broadcast_sum.add_assign(&msg.payload);
        comms.bits_down += msg.bits * n as u64;
        comms.messages_down += n as u64;

        let played = self.decision.clone();
        self.anchors.push(1.0, &played);
        self.decision = ftrl_update(
            &self.set,
            self.mode,
            &self.server.broadcast_sum,
            &self.anchors,
        );

        Ok(RoundOutcome {
            decision: played,
            uplink,
            aggregate,
            broadcast: msg.payload,
            comms,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_box(d: usize) -> FeasibleSet {
        FeasibleSet::cube(d, -1.0, 1.0).unwrap()
    }

    #[test]
    fn zero_gradients_keep_origin() {
        let mut alg = Dftcl::new(
            2,
            unit_box(3),
            CompressorSpec::RandK(1),
            Mode::Convex { eta: 0.5 },
            1,
        )
        .unwrap();
        alg.step(&[DecisionVector::zeros(3), DecisionVector::zeros(3)])
            .unwrap();
        assert_eq!(alg.decision().as_slice(), &[0.0; 3]);
    }

    #[test]
    fn identity_compressor_has_no_error() {
        let mut alg = Dftcl::new(
            2,
            unit_box(2),
            CompressorSpec::Identity,
            Mode::Convex { eta: 0.1 },
            1,
        )
        .unwrap();
        let out = alg
            .step(&[
                DecisionVector::from([1.0, 0.0]),
                DecisionVector::from([0.0, -1.0]),
            ])
            .unwrap();
        assert_eq!(out.broadcast.as_slice(), &[0.5, -0.5]);
        assert!(alg.learners().iter().all(|l| l.error.norm() == 0.0));
        assert_eq!(alg.server().error.norm(), 0.0);
        assert_eq!(alg.decision().as_slice(), &[-0.025, 0.025]);
    }

    #[test]
    fn gossip_error_feedback_trace() {
        // d = 1, n = 1: find a seed whose first transmission fails and second succeeds
        let spec = CompressorSpec::RandomGossip(0.5);
        let set = FeasibleSet::cube(1, -10.0, 10.0).unwrap();
        let g1 = DecisionVector::from([0.3]);
        let g2 = DecisionVector::from([-0.1]);
        let mut checked = false;
        for seed in 0..64 {
            let mut alg =
                Dftcl::unidirectional(1, set.clone(), spec, Mode::Convex { eta: 1.0 }, seed)
                    .unwrap();
            let first = alg.step(std::slice::from_ref(&g1)).unwrap();
            if first.uplink[0][0] != 0.0 {
                continue;
            }
            assert_eq!(alg.learners()[0].error.as_slice(), &[0.3]);
            let second = alg.step(std::slice::from_ref(&g2)).unwrap();
            if second.uplink[0][0] == 0.0 {
                assert!((alg.learners()[0].error[0] - 0.2).abs() < 1e-15);
                continue;
            }
            assert!((second.uplink[0][0] - 0.2).abs() < 1e-15);
            assert_eq!(alg.learners()[0].error.as_slice(), &[0.0]);
            checked = true;
            break;
        }
        assert!(checked);
    }

    #[test]
    fn unidirectional_server_memory_stays_zero() {
        let mut alg = Dftcl::unidirectional(
            3,
            unit_box(4),
            CompressorSpec::RandK(1),
            Mode::Convex { eta: 0.2 },
            5,
        )
        .unwrap();
        for k in 0..50 {
            let grads: Vec<DecisionVector> = (0..3)
                .map(|i| DecisionVector::from_iter((0..4).map(|j| ((i + j + k) % 3) as f64 - 1.0)))
                .collect();
            let out = alg.step(&grads).unwrap();
            assert_eq!(out.broadcast, out.aggregate);
            assert_eq!(alg.server().error.norm(), 0.0);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let mut alg = Dftcl::new(
            2,
            unit_box(2),
            CompressorSpec::Identity,
            Mode::Convex { eta: 0.1 },
            1,
        )
        .unwrap();
        assert!(alg.step(&[DecisionVector::zeros(2)]).is_err());
        assert!(alg
            .step(&[DecisionVector::zeros(2), DecisionVector::zeros(3)])
            .is_err());
        assert!(Dftcl::new(
            2,
            unit_box(2),
            CompressorSpec::Identity,
            Mode::Convex { eta: 0.0 },
            1
        )
        .is_err());
        assert!(Dftcl::new(
            2,
            unit_box(2),
            CompressorSpec::RandK(3),
            Mode::Convex { eta: 1.0 },
            1
        )
        .is_err());
    }
}
