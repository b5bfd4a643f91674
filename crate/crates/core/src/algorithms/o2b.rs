//! Distributed anytime online-to-batch conversion.
//!
//! The online learner is D-FTCL with every single-shot compression replaced
//! by an `L`-round FCC transfer. At update `t` each learner queries a
//! stochastic subgradient at the weighted average `x^t = sum_k a_k w^k / a_{1:t}`
//! and feeds `a_t g_i^t` to the learner.

use super::{check_dims, ftrl_update, Anchors, Comms, LearnerState, Mode, ServerState};
use crate::compressors::{fcc, CompressorSpec};
use crate::domains::FeasibleSet;
use crate::environments::{RoundLoss, StochasticProblem};
use crate::error::{Error, Result};
use crate::rng::{self, entity};
use crate::vector::{mean_of, DecisionVector};

/// Averaging weights `a_t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weights {
    /// `a_t = 1`
    Uniform,
    /// `a_t = t`
    Linear,
}

impl Weights {
    pub fn at(&self, t: usize) -> f64 {
        match self {
            Weights::Uniform => 1.0,
            Weights::Linear => t as f64,
        }
    }
}

#[derive(Debug, Clone)]
pub struct O2b {
    set: FeasibleSet,
    uplink: CompressorSpec,
    downlink: CompressorSpec,
    fcc_rounds: usize,
    mode: Mode,
    weights: Weights,
    seed: u64,
    learners: Vec<LearnerState>,
    server: ServerState,
    anchors: Anchors,
    decision: DecisionVector,
    weighted_decisions: DecisionVector,
    weight_total: f64,
    update: usize,
}

#[derive(Debug, Clone)]
pub struct O2bOutcome {
    /// Online decision `w^t` that the surrogate losses are charged at.
    pub decision: DecisionVector,
    /// Anytime iterate `x^t` where subgradients were queried.
    pub iterate: DecisionVector,
    pub weight: f64,
    /// Surrogate loss of each learner for this update.
    pub surrogate: Vec<RoundLoss>,
    pub comms: Comms,
}

impl O2b {
    pub fn new(
        n: usize,
        set: FeasibleSet,
        compressor: CompressorSpec,
        fcc_rounds: usize,
        mode: Mode,
        weights: Weights,
        seed: u64,
    ) -> Result<Self> {
        Self::build(
            n, set, compressor, compressor, fcc_rounds, mode, weights, seed,
        )
    }

    #[allow(clippy::too_many_arguments)]
    pub fn unidirectional(
        n: usize,
        set: FeasibleSet,
        compressor: CompressorSpec,
        fcc_rounds: usize,
        mode: Mode,
        weights: Weights,
        seed: u64,
    ) -> Result<Self> {
        Self::build(
            n,
            set,
            compressor,
            CompressorSpec::Identity,
            fcc_rounds,
            mode,
            weights,
            seed,
        )
    }

    #[allow(clippy::too_many_arguments)]
    fn build(
        n: usize,
        set: FeasibleSet,
        uplink: CompressorSpec,
        downlink: CompressorSpec,
        fcc_rounds: usize,
        mode: Mode,
        weights: Weights,
        seed: u64,
    ) -> Result<Self> {
        check_dims(&set, n)?;
        mode.validate()?;
        if fcc_rounds < 1 {
            return Err(Error::config(
                "L",
                "FCC needs at least one compression round",
            ));
        }
        uplink.validate(set.dim())?;
        downlink.validate(set.dim())?;
        let d = set.dim();
        Ok(O2b {
            learners: (0..n).map(|_| LearnerState::new(d)).collect(),
            server: ServerState::new(d),
            anchors: Anchors::new(d),
            decision: DecisionVector::zeros(d),
            weighted_decisions: DecisionVector::zeros(d),
            weight_total: 0.0,
            update: 0,
            set,
            uplink,
            downlink,
            fcc_rounds,
            mode,
            weights,
            seed,
        })
    }

    pub fn decision(&self) -> &DecisionVector {
        &self.decision
    }

    pub fn updates(&self) -> usize {
        self.update
    }

    pub fn fcc_rounds(&self) -> usize {
        self.fcc_rounds
    }

    pub fn learners(&self) -> &[LearnerState] {
        &self.learners
    }

    pub fn server(&self) -> &ServerState {
        &self.server
    }

    /// Current anytime iterate, `None` before the first update.
    pub fn iterate(&self) -> Option<DecisionVector> {
        (self.weight_total > 0.0).then(|| self.weighted_decisions.scaled(1.0 / self.weight_total))
    }

    /// One update against a stochastic problem.
    pub fn step(&mut self, problem: &StochasticProblem) -> O2bOutcome {
        let t = self.update + 1;
        let n = self.learners.len();
        let x = self.begin_update();
        let grads: Vec<DecisionVector> = (0..n)
            .map(|i| {
                let mut rng =
                    rng::stream(self.seed, entity::learner(entity::ORACLE, i), t as u64, 0);
                problem.stochastic_subgradient(i, &x, &mut rng)
            })
            .collect();
        self.finish_update(x, &grads)
            .expect("problem matches engine dimensions")
    }

    /// One update given the (unscaled) subgradients queried at `x^t`.
    ///
    /// `grad_fn` receives the iterate and returns one subgradient per learner.
    pub fn step_with<F>(&mut self, grad_fn: F) -> Result<O2bOutcome>
    where
        F: FnOnce(&DecisionVector) -> Vec<DecisionVector>,
    {
        let x = self.begin_update();
        let grads = grad_fn(&x);
        self.finish_update(x, &grads)
    }

    fn begin_update(&mut self) -> DecisionVector {
        let t = self.update + 1;
        let alpha = self.weights.at(t);
        self.weighted_decisions.axpy(alpha, &self.decision);
        self.weight_total += alpha;
        self.weighted_decisions.scaled(1.0 / self.weight_total)
    }

    fn finish_update(&mut self, x: DecisionVector, grads: &[DecisionVector]) -> Result<O2bOutcome> {
        let n = self.learners.len();
        let d = self.set.dim();
        if grads.len() != n {
            return Err(Error::Input(format!(
                "expected {n} gradients, got {}",
                grads.len()
            )));
        }
        if let Some(g) = grads.iter().find(|g| g.dim() != d) {
            return Err(Error::Dimension {
                expected: d,
                actual: g.dim(),
            });
        }
        self.update += 1;
        let t = self.update as u64;
        let alpha = self.weights.at(self.update);
        let mut comms = Comms::default();

        let mut uplink = Vec::with_capacity(n);
        let mut surrogate = Vec::with_capacity(n);
        for (i, (state, g)) in self.learners.iter_mut().zip(grads).enumerate() {
            let scaled = g.scaled(alpha);
            let target = state.error.add(&scaled);
            let mut rng = rng::stream(self.seed, entity::learner(entity::LEARNER_UPLINK, i), t, 0);
            let out = fcc(&target, &self.uplink, self.fcc_rounds, &mut rng)?;
            comms.bits_up += out.total_bits();
            comms.messages_up += out.messages.len() as u64;
            state.error = target.sub(&out.residual_sum);
            uplink.push(out.residual_sum);
            surrogate.push(RoundLoss::Linear(scaled));
        }

        let aggregate = mean_of(d, &uplink);
        let target = self.server.error.add(&aggregate);
        let mut rng = rng::stream(self.seed, entity::SERVER_DOWNLINK, t, 0);
        let out = fcc(&target, &self.downlink, self.fcc_rounds, &mut rng)?;
        comms.bits_down += out.total_bits() * n as u64;
        comms.messages_down += (out.messages.len() * n) as u64;
        self.server.error = target.sub(&out.residual_sum);
        self.server.broadcast_sum.add_assign(&out.residual_sum);

        if let Mode::StronglyConvex { mu } = self.mode {
            self.anchors.push(alpha, &x);
            // shared by all learners, appended after the n linear terms
            surrogate.push(RoundLoss::Quadratic {
                mu: mu * alpha,
                center: x.clone(),
            });
        }

        let played = self.decision.clone();
        self.decision = ftrl_update(
            &self.set,
            self.mode,
            &self.server.broadcast_sum,
            &self.anchors,
        );
        Ok(O2bOutcome {
            decision: played,
            iterate: x,
            weight: alpha,
            surrogate,
            comms,
        })
    }
}

/// Surrogate loss of one update averaged over learners, evaluated at `w`.
///
/// In strongly convex mode the last entry of `surrogate` is the shared quadratic,
/// which every learner adds to its linear term.
pub fn surrogate_value(outcome: &O2bOutcome, learners: usize, w: &[f64]) -> f64 {
    let linear: f64 = outcome
        .surrogate
        .iter()
        .take(learners)
        .map(|l| l.value(w))
        .sum::<f64>()
        / learners as f64;
    let quad: f64 = outcome
        .surrogate
        .iter()
        .skip(learners)
        .map(|l| l.value(w))
        .sum();
    linear + quad
}

#[cfg(test)]
mod tests {
    use super::*;

    fn engine(weights: Weights) -> O2b {
        let set = FeasibleSet::cube(1, -2.0, 2.0).unwrap();
        O2b::new(
            1,
            set,
            CompressorSpec::Identity,
            1,
            Mode::Convex { eta: 1.0 },
            weights,
            0,
        )
        .unwrap()
    }

    #[test]
    fn first_iterate_is_origin() {
        let mut alg = engine(Weights::Linear);
        let out = alg
            .step_with(|_| vec![DecisionVector::from([1.0])])
            .unwrap();
        assert_eq!(out.iterate.as_slice(), &[0.0]);
    }

    #[test]
    fn linear_weights_average() {
        // w^1 = 0; choose g so that w^2 = 1: w^2 = -(eta/2) * 1 * g = 1 with g = -2
        let mut alg = engine(Weights::Linear);
        alg.step_with(|_| vec![DecisionVector::from([-2.0])])
            .unwrap();
        assert_eq!(alg.decision().as_slice(), &[1.0]);
        let out = alg
            .step_with(|_| vec![DecisionVector::from([0.0])])
            .unwrap();
        assert!((out.iterate[0] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn uniform_weights_running_average() {
        let mut alg = engine(Weights::Uniform);
        let mut played = Vec::new();
        for k in 0..6 {
            let g = if k % 2 == 0 { -0.7 } else { 0.3 };
            let out = alg.step_with(|_| vec![DecisionVector::from([g])]).unwrap();
            played.push(out.decision[0]);
            let avg = played.iter().sum::<f64>() / played.len() as f64;
            assert!((out.iterate[0] - avg).abs() < 1e-14);
        }
    }

    #[test]
    fn strongly_convex_surrogate_includes_quadratic() {
        let set = FeasibleSet::cube(2, 0.0, 1.0).unwrap();
        let mut alg = O2b::new(
            2,
            set,
            CompressorSpec::Identity,
            1,
            Mode::StronglyConvex { mu: 0.5 },
            Weights::Linear,
            0,
        )
        .unwrap();
        let out = alg
            .step_with(|_| {
                vec![
                    DecisionVector::from([1.0, 0.0]),
                    DecisionVector::from([0.0, 1.0]),
                ]
            })
            .unwrap();
        assert_eq!(out.surrogate.len(), 3);
        let v = surrogate_value(&out, 2, &[1.0, 1.0]);
        // linear: (1 + 1)/2 = 1, quadratic: 0.5/2 * ||(1,1) - 0||^2 = 0.5
        assert!((v - 1.5).abs() < 1e-15);
    }
}
