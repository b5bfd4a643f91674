//! Loss oracles: adversarial online sequences and stochastic offline problems.
//!
//! Online losses are decision independent functions of `(seed, round, learner)`,
//! so every query is reproducible and environments can be shared across threads.
//! Rounds are 1-based.

use rand::Rng;

use crate::domains::{FeasibleSet, LossAccumulator};
use crate::error::{Error, Result};
use crate::rng::{self, entity, StreamRng};
use crate::vector::DecisionVector;

/// The loss one learner sees in one round.
#[derive(Debug, Clone, PartialEq)]
pub enum RoundLoss {
    /// `<coef, w>`
    Linear(DecisionVector),
    /// `(mu/2) ||w - center||^2`
    Quadratic { mu: f64, center: DecisionVector },
}

impl RoundLoss {
    pub fn value(&self, w: &[f64]) -> f64 {
        match self {
            RoundLoss::Linear(c) => c.dot(w),
            RoundLoss::Quadratic { mu, center } => 0.5 * mu * center.dist_sq(w),
        }
    }

    pub fn gradient(&self, w: &[f64]) -> DecisionVector {
        match self {
            RoundLoss::Linear(c) => c.clone(),
            RoundLoss::Quadratic { mu, center } => {
                let mut g = DecisionVector::from(w);
                g.sub_assign(center);
                g.scale(*mu);
                g
            }
        }
    }

    /// Adds `weight * self` to a comparator accumulator.
    pub fn accumulate(&self, acc: &mut LossAccumulator, weight: f64) {
        match self {
            RoundLoss::Linear(c) => acc.add_linear(weight, c),
            RoundLoss::Quadratic { mu, center } => acc.add_quadratic(weight, *mu, center),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Generator {
    /// `g_i^t` in `{±G/sqrt d}^d`. Coordinate `j` takes the hidden sign `s_j`
    /// with probability `(1 + drift)/2`; `drift = 0` is the uniform distribution.
    Linear { drift: f64, hidden_signs: Vec<f64> },
    /// `(mu/2)||w - b_i^t||^2` with `b_i^t` uniform in the feasible box.
    ScQuadratic { mu: f64 },
    /// Half the learners see zero loss, the rest `<z, w>` with `z` redrawn per interval.
    ConvexLowerBound {
        interval: usize,
        zero_learners: usize,
    },
    /// Half the learners see `(mu/2)||w||^2`, the rest `(mu/2)||w - D z/sqrt d||^2`
    /// with `z` all-ones with probability `p` (else all-zeros), redrawn per interval.
    ScLowerBound {
        mu: f64,
        p: f64,
        interval: usize,
        zero_learners: usize,
        diameter: f64,
    },
}

/// An adversary for `n` learners over `T` rounds.
#[derive(Debug, Clone)]
pub struct OnlineEnvironment {
    n: usize,
    d: usize,
    horizon: usize,
    gradient_bound: f64,
    set: FeasibleSet,
    seed: u64,
    generator: Generator,
}

fn check_positive_usize(field: &str, v: usize) -> Result<()> {
    if v == 0 {
        return Err(Error::config(field, "must be at least 1"));
    }
    Ok(())
}

fn check_positive(field: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::config(field, format!("must be positive, got {v}")));
    }
    Ok(())
}

fn check_common(n: usize, d: usize, horizon: usize) -> Result<()> {
    check_positive_usize("n", n)?;
    check_positive_usize("d", d)?;
    check_positive_usize("T", horizon)
}

/// Interval length `K = ceil(1/delta)` of the lower-bound constructions.
pub fn lower_bound_interval(delta: f64) -> usize {
    (1.0 / delta - 1e-12).ceil().max(1.0) as usize
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::config(
            "delta",
            format!("must lie in (0, 1], got {delta}"),
        ));
    }
    Ok(())
}

impl OnlineEnvironment {
    /// Uniform sign adversary over the centered cube of diameter `D`.
    pub fn linear_adversary(
        n: usize,
        d: usize,
        horizon: usize,
        g: f64,
        diameter: f64,
        seed: u64,
    ) -> Result<Self> {
        Self::drifting_linear_adversary(n, d, horizon, g, diameter, 0.0, seed)
    }

    pub fn drifting_linear_adversary(
        n: usize,
        d: usize,
        horizon: usize,
        g: f64,
        diameter: f64,
        drift: f64,
        seed: u64,
    ) -> Result<Self> {
        check_positive("D", diameter)?;
        let set = FeasibleSet::centered_cube_with_diameter(d.max(1), diameter)?;
        Self::linear_adversary_on(n, d, horizon, g, set, drift, seed)
    }

    /// Linear adversary on an explicit feasible set.
    pub fn linear_adversary_on(
        n: usize,
        d: usize,
        horizon: usize,
        g: f64,
        set: FeasibleSet,
        drift: f64,
        seed: u64,
    ) -> Result<Self> {
        check_common(n, d, horizon)?;
        check_positive("G", g)?;
        if !(0.0..1.0).contains(&drift) {
            return Err(Error::config(
                "drift",
                format!("must lie in [0, 1), got {drift}"),
            ));
        }
        if set.dim() != d {
            return Err(Error::config("set", "dimension differs from d"));
        }
        let mut rng = rng::stream(seed, entity::ENV_SHARED, 0, 0);
        let hidden_signs = (0..d)
            .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
            .collect();
        Ok(OnlineEnvironment {
            n,
            d,
            horizon,
            gradient_bound: g,
            set,
            seed,
            generator: Generator::Linear {
                drift,
                hidden_signs,
            },
        })
    }

    /// Strongly convex quadratic adversary on the centered cube of diameter `D`.
    pub fn sc_quadratic_adversary(
        n: usize,
        d: usize,
        horizon: usize,
        mu: f64,
        g: f64,
        diameter: f64,
        seed: u64,
    ) -> Result<Self> {
        check_positive("D", diameter)?;
        let set = FeasibleSet::centered_cube_with_diameter(d.max(1), diameter)?;
        Self::sc_quadratic_adversary_on(n, d, horizon, mu, g, set, seed)
    }

    pub fn sc_quadratic_adversary_on(
        n: usize,
        d: usize,
        horizon: usize,
        mu: f64,
        g: f64,
        set: FeasibleSet,
        seed: u64,
    ) -> Result<Self> {
        check_common(n, d, horizon)?;
        check_positive("mu", mu)?;
        check_positive("G", g)?;
        if !matches!(set, FeasibleSet::Box { .. }) {
            return Err(Error::config(
                "set",
                "quadratic adversary draws centers from a box",
            ));
        }
        if set.dim() != d {
            return Err(Error::config("set", "dimension differs from d"));
        }
        let diameter = set.diameter();
        if mu * diameter > g * (1.0 + 1e-12) {
            return Err(Error::config(
                "mu",
                format!(
                    "mu * D = {} exceeds the gradient bound G = {g}",
                    mu * diameter
                ),
            ));
        }
        Ok(OnlineEnvironment {
            n,
            d,
            horizon,
            gradient_bound: g,
            set,
            seed,
            generator: Generator::ScQuadratic { mu },
        })
    }

    /// Convex lower-bound construction on `[-D/(2 sqrt d), D/(2 sqrt d)]^d`.
    pub fn convex_lower_bound(
        n: usize,
        d: usize,
        horizon: usize,
        g: f64,
        diameter: f64,
        delta: f64,
        seed: u64,
    ) -> Result<Self> {
        check_common(n, d, horizon)?;
        check_positive("G", g)?;
        check_positive("D", diameter)?;
        check_delta(delta)?;
        if (horizon as f64) < (1.0 - delta) / delta {
            return Err(Error::config(
                "T",
                format!("needs T >= (1 - delta)/delta = {}", (1.0 - delta) / delta),
            ));
        }
        Ok(OnlineEnvironment {
            n,
            d,
            horizon,
            gradient_bound: g,
            set: FeasibleSet::centered_cube_with_diameter(d, diameter)?,
            seed,
            generator: Generator::ConvexLowerBound {
                interval: lower_bound_interval(delta),
                zero_learners: n / 2,
            },
        })
    }

    /// Strongly convex lower-bound construction on `[0, D/sqrt d]^d`.
    #[allow(clippy::too_many_arguments)]
    pub fn sc_lower_bound(
        n: usize,
        d: usize,
        horizon: usize,
        mu: f64,
        diameter: f64,
        delta: f64,
        p: f64,
        seed: u64,
    ) -> Result<Self> {
        check_common(n, d, horizon)?;
        check_positive("mu", mu)?;
        check_positive("D", diameter)?;
        check_delta(delta)?;
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::config("p", format!("must lie in [0, 1], got {p}")));
        }
        if (horizon as f64) < (16.0 + delta) / delta {
            return Err(Error::config(
                "T",
                format!("needs T >= (16 + delta)/delta = {}", (16.0 + delta) / delta),
            ));
        }
        Ok(OnlineEnvironment {
            n,
            d,
            horizon,
            gradient_bound: mu * diameter,
            set: FeasibleSet::cube(d, 0.0, diameter / (d as f64).sqrt())?,
            seed,
            generator: Generator::ScLowerBound {
                mu,
                p,
                interval: lower_bound_interval(delta),
                zero_learners: n / 2,
                diameter,
            },
        })
    }

    pub fn learners(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn gradient_bound(&self) -> f64 {
        self.gradient_bound
    }

    pub fn set(&self) -> &FeasibleSet {
        &self.set
    }

    pub fn generator(&self) -> &Generator {
        &self.generator
    }

    /// Strong convexity modulus of every loss, if the family is strongly convex.
    pub fn strong_convexity(&self) -> Option<f64> {
        match self.generator {
            Generator::ScQuadratic { mu } | Generator::ScLowerBound { mu, .. } => Some(mu),
            _ => None,
        }
    }

    /// Interval index (0-based) of round `t` for the lower-bound constructions.
    pub fn interval_of(&self, t: usize) -> Option<usize> {
        match self.generator {
            Generator::ConvexLowerBound { interval, .. }
            | Generator::ScLowerBound { interval, .. } => Some((t.max(1) - 1) / interval),
            _ => None,
        }
    }

    /// Interval endpoints `c_0 = 0 < c_1 < ... < c_{Z+1} = T`.
    pub fn interval_bounds(&self) -> Option<Vec<usize>> {
        let k = match self.generator {
            Generator::ConvexLowerBound { interval, .. }
            | Generator::ScLowerBound { interval, .. } => interval,
            _ => return None,
        };
        let z = (self.horizon - 1) / k;
        let mut c: Vec<usize> = (0..=z).map(|i| i * k).collect();
        c.push(self.horizon);
        Some(c)
    }

    /// Number of learners that see zero (or centered) loss in the lower bounds.
    pub fn zero_learners(&self) -> usize {
        match self.generator {
            Generator::ConvexLowerBound { zero_learners, .. }
            | Generator::ScLowerBound { zero_learners, .. } => zero_learners,
            _ => 0,
        }
    }

    fn learner_stream(&self, t: usize, learner: usize) -> StreamRng {
        rng::stream(
            self.seed,
            entity::learner(entity::ENV, learner),
            t as u64,
            0,
        )
    }

    fn interval_stream(&self, interval_index: usize) -> StreamRng {
        rng::stream(self.seed, entity::ENV_SHARED, interval_index as u64 + 1, 0)
    }

    /// Loss of `learner` (0-based) at round `t` (1-based).
    pub fn loss(&self, t: usize, learner: usize) -> RoundLoss {
        let d = self.d;
        match &self.generator {
            Generator::Linear {
                drift,
                hidden_signs,
            } => {
                let mut rng = self.learner_stream(t, learner);
                let mag = self.gradient_bound / (d as f64).sqrt();
                let agree = 0.5 * (1.0 + drift);
                let coef = hidden_signs
                    .iter()
                    .map(|s| {
                        if rng.random::<f64>() < agree {
                            s * mag
                        } else {
                            -s * mag
                        }
                    })
                    .collect();
                RoundLoss::Linear(coef)
            }
            Generator::ScQuadratic { mu } => {
                let mut rng = self.learner_stream(t, learner);
                let FeasibleSet::Box { lo, hi } = &self.set else {
                    unreachable!("validated at construction")
                };
                let center = lo
                    .iter()
                    .zip(hi)
                    .map(|(l, h)| l + (h - l) * rng.random::<f64>())
                    .collect();
                RoundLoss::Quadratic { mu: *mu, center }
            }
            Generator::ConvexLowerBound {
                interval,
                zero_learners,
            } => {
                if learner < *zero_learners {
                    return RoundLoss::Linear(DecisionVector::zeros(d));
                }
                let mut rng = self.interval_stream((t.max(1) - 1) / interval);
                let mag = self.gradient_bound / (d as f64).sqrt();
                RoundLoss::Linear(
                    (0..d)
                        .map(|_| if rng.random::<bool>() { mag } else { -mag })
                        .collect(),
                )
            }
            Generator::ScLowerBound {
                mu,
                p,
                interval,
                zero_learners,
                diameter,
            } => {
                if learner < *zero_learners {
                    return RoundLoss::Quadratic {
                        mu: *mu,
                        center: DecisionVector::zeros(d),
                    };
                }
                let mut rng = self.interval_stream((t.max(1) - 1) / interval);
                let ones = rng.random::<f64>() < *p;
                let level = if ones {
                    diameter / (d as f64).sqrt()
                } else {
                    0.0
                };
                RoundLoss::Quadratic {
                    mu: *mu,
                    center: DecisionVector::filled(d, level),
                }
            }
        }
    }

    /// All learners' losses for round `t`.
    pub fn round_losses(&self, t: usize) -> Vec<RoundLoss> {
        (0..self.n).map(|i| self.loss(t, i)).collect()
    }
}

/// Distributed least-absolute-deviation problem
/// `f(x) = (1/n) sum_i mean_j ||x - a_ij||_1`, optionally plus `(mu/2)||x - c||^2`.
#[derive(Debug, Clone)]
pub struct StochasticProblem {
    shards: Vec<Vec<DecisionVector>>,
    set: FeasibleSet,
    regularizer: Option<(f64, DecisionVector)>,
    optimum: DecisionVector,
    optimal_value: f64,
}

impl StochasticProblem {
    /// Random LAD instance with data uniform in the feasible box.
    pub fn lad(
        n: usize,
        d: usize,
        samples_per_learner: usize,
        set: FeasibleSet,
        seed: u64,
    ) -> Result<Self> {
        check_positive_usize("n", n)?;
        check_positive_usize("d", d)?;
        check_positive_usize("samples", samples_per_learner)?;
        let FeasibleSet::Box { lo, hi } = &set else {
            return Err(Error::config("set", "LAD data is drawn from a box"));
        };
        if set.dim() != d {
            return Err(Error::config("set", "dimension differs from d"));
        }
        let shards = (0..n)
            .map(|i| {
                let mut rng = rng::stream(seed, entity::learner(entity::DATA, i), 0, 0);
                (0..samples_per_learner)
                    .map(|_| {
                        lo.iter()
                            .zip(hi)
                            .map(|(l, h)| l + (h - l) * rng.random::<f64>())
                            .collect()
                    })
                    .collect()
            })
            .collect();
        Self::from_shards(shards, set, None)
    }

    /// Builds a problem from explicit per-learner data. Shards must be equally sized.
    pub fn from_shards(
        shards: Vec<Vec<DecisionVector>>,
        set: FeasibleSet,
        regularizer: Option<(f64, DecisionVector)>,
    ) -> Result<Self> {
        if shards.is_empty() || shards.iter().any(|s| s.is_empty()) {
            return Err(Error::config(
                "samples",
                "every learner needs at least one sample",
            ));
        }
        let per = shards[0].len();
        if shards.iter().any(|s| s.len() != per) {
            return Err(Error::config("samples", "shards must be equally sized"));
        }
        let d = set.dim();
        if shards.iter().flatten().any(|a| a.dim() != d) {
            return Err(Error::config(
                "d",
                "sample dimension differs from the feasible set",
            ));
        }
        if !matches!(set, FeasibleSet::Box { .. }) {
            return Err(Error::config("set", "LAD optimum is computed over a box"));
        }
        if let Some((mu, c)) = &regularizer {
            check_positive("mu", *mu)?;
            if c.dim() != d {
                return Err(Error::config("center", "dimension differs from d"));
            }
        }
        let mut problem = StochasticProblem {
            shards,
            set,
            regularizer,
            optimum: DecisionVector::zeros(d),
            optimal_value: 0.0,
        };
        problem.optimum = problem.solve_exact();
        problem.optimal_value = problem.value(&problem.optimum);
        Ok(problem)
    }

    /// Adds `(mu/2)||x - center||^2` and recomputes the optimum.
    pub fn with_regularizer(self, mu: f64, center: DecisionVector) -> Result<Self> {
        Self::from_shards(self.shards, self.set, Some((mu, center)))
    }

    pub fn learners(&self) -> usize {
        self.shards.len()
    }

    pub fn dim(&self) -> usize {
        self.set.dim()
    }

    pub fn set(&self) -> &FeasibleSet {
        &self.set
    }

    pub fn shards(&self) -> &[Vec<DecisionVector>] {
        &self.shards
    }

    pub fn strong_convexity(&self) -> Option<f64> {
        self.regularizer.as_ref().map(|(mu, _)| *mu)
    }

    /// Bound on stochastic subgradient norms: `sqrt d`, plus `mu D` when regularized.
    pub fn gradient_bound(&self) -> f64 {
        let base = (self.dim() as f64).sqrt();
        match &self.regularizer {
            Some((mu, c)) => {
                let FeasibleSet::Box { lo, hi } = &self.set else {
                    unreachable!()
                };
                let far: f64 = lo
                    .iter()
                    .zip(hi)
                    .zip(c.iter())
                    .map(|((l, h), ci)| (ci - l).abs().max((h - ci).abs()).powi(2))
                    .sum::<f64>()
                    .sqrt();
                base + mu * far
            }
            None => base,
        }
    }

    pub fn optimum(&self) -> &DecisionVector {
        &self.optimum
    }

    pub fn optimal_value(&self) -> f64 {
        self.optimal_value
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let n = self.shards.len() as f64;
        let mut total = 0.0;
        for shard in &self.shards {
            let s: f64 = shard
                .iter()
                .map(|a| a.iter().zip(x).map(|(ai, xi)| (xi - ai).abs()).sum::<f64>())
                .sum();
            total += s / shard.len() as f64;
        }
        let mut v = total / n;
        if let Some((mu, c)) = &self.regularizer {
            v += 0.5 * mu * c.dist_sq(x);
        }
        v
    }

    fn add_regularizer_gradient(&self, x: &[f64], g: &mut DecisionVector) {
        if let Some((mu, c)) = &self.regularizer {
            for ((gi, xi), ci) in g.iter_mut().zip(x).zip(c.iter()) {
                *gi += mu * (xi - ci);
            }
        }
    }

    /// Stochastic subgradient of `f_i` at `x`: `sign(x - a)` for one uniformly
    /// sampled `a` of shard `learner`, with `sign(0) = 0`.
    pub fn stochastic_subgradient(
        &self,
        learner: usize,
        x: &[f64],
        rng: &mut StreamRng,
    ) -> DecisionVector {
        let shard = &self.shards[learner];
        let a = &shard[rng.random_range(0..shard.len())];
        let mut g: DecisionVector = x
            .iter()
            .zip(a.iter())
            .map(|(xi, ai)| sign0(xi - ai))
            .collect();
        self.add_regularizer_gradient(x, &mut g);
        g
    }

    /// Full-batch subgradient of `f_i` at `x` (mean of the per-sample signs).
    pub fn full_subgradient(&self, learner: usize, x: &[f64]) -> DecisionVector {
        let shard = &self.shards[learner];
        let mut g = DecisionVector::zeros(x.len());
        for a in shard {
            for (gj, (xj, aj)) in g.iter_mut().zip(x.iter().zip(a.iter())) {
                *gj += sign0(xj - aj);
            }
        }
        g.scale(1.0 / shard.len() as f64);
        self.add_regularizer_gradient(x, &mut g);
        g
    }

    /// Coordinate-wise exact minimizer. The objective is separable and, per
    /// coordinate, convex piecewise quadratic with breakpoints at the data, so the
    /// minimum is attained at a breakpoint, a box end, or a segment's stationary point.
    fn solve_exact(&self) -> DecisionVector {
        let FeasibleSet::Box { lo, hi } = &self.set else {
            unreachable!()
        };
        let points: Vec<&DecisionVector> = self.shards.iter().flatten().collect();
        let count = points.len();
        (0..self.dim())
            .map(|j| {
                let mut col: Vec<f64> = points.iter().map(|a| a[j]).collect();
                col.sort_by(f64::total_cmp);
                let reg = self.regularizer.as_ref().map(|(mu, c)| (*mu, c[j]));
                let objective = |x: f64| {
                    let s: f64 = col.iter().map(|a| (x - a).abs()).sum::<f64>() / count as f64;
                    s + reg.map_or(0.0, |(mu, c)| 0.5 * mu * (x - c) * (x - c))
                };
                let mut candidates = vec![lo[j], hi[j]];
                candidates.extend(col.iter().copied());
                if let Some((mu, c)) = reg {
                    // derivative on a segment with k points below: (2k - N)/N + mu (x - c)
                    for k in 0..=count {
                        candidates.push(c - (2.0 * k as f64 - count as f64) / (count as f64 * mu));
                    }
                }
                let mut best = (f64::INFINITY, lo[j]);
                for x in candidates {
                    let x = x.clamp(lo[j], hi[j]);
                    let v = objective(x);
                    if v < best.0 {
                        best = (v, x);
                    }
                }
                best.1
            })
            .collect()
    }
}

fn sign0(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_adversary_gradients() {
        let env = OnlineEnvironment::linear_adversary(3, 1, 50, 1.0, 1.0, 1).unwrap();
        for t in 1..=50 {
            for i in 0..3 {
                let g = env.loss(t, i).gradient(&[0.0]);
                assert_eq!(g[0].abs(), 1.0);
            }
        }
        let env = OnlineEnvironment::linear_adversary(2, 4, 20, 1.0, 2.0, 3).unwrap();
        for t in 1..=20 {
            let g = env.loss(t, 1).gradient(&[0.0; 4]);
            assert!((g.norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn linear_adversary_is_deterministic() {
        let a = OnlineEnvironment::linear_adversary(2, 5, 30, 1.0, 2.0, 9).unwrap();
        let b = OnlineEnvironment::linear_adversary(2, 5, 30, 1.0, 2.0, 9).unwrap();
        for t in 1..=30 {
            assert_eq!(a.round_losses(t), b.round_losses(t));
        }
        let c = OnlineEnvironment::linear_adversary(2, 5, 30, 1.0, 2.0, 10).unwrap();
        assert!((1..=30).any(|t| a.round_losses(t) != c.round_losses(t)));
    }

    #[test]
    fn drift_biases_toward_hidden_signs() {
        let env =
            OnlineEnvironment::drifting_linear_adversary(4, 8, 2000, 1.0, 2.0, 0.5, 4).unwrap();
        let Generator::Linear { hidden_signs, .. } = env.generator().clone() else {
            panic!()
        };
        let mut agree = 0usize;
        let mut total = 0usize;
        for t in 1..=2000 {
            for i in 0..4 {
                let RoundLoss::Linear(c) = env.loss(t, i) else {
                    panic!()
                };
                for (cj, sj) in c.iter().zip(&hidden_signs) {
                    agree += (cj.signum() == *sj) as usize;
                    total += 1;
                }
            }
        }
        let frac = agree as f64 / total as f64;
        assert!((frac - 0.75).abs() < 0.01, "{frac}");
    }

    #[test]
    fn quadratic_adversary_examples() {
        let loss = RoundLoss::Quadratic {
            mu: 1.0,
            center: DecisionVector::from([0.5]),
        };
        assert_eq!(loss.gradient(&[0.0]).as_slice(), &[-0.5]);
        assert_eq!(loss.gradient(&[0.5]).as_slice(), &[0.0]);
        let err =
            OnlineEnvironment::sc_quadratic_adversary(2, 2, 10, 2.0, 1.0, 1.0, 0).unwrap_err();
        assert_eq!(err.field(), Some("mu"));
        assert!(OnlineEnvironment::sc_quadratic_adversary(2, 2, 10, 1.0, 1.0, 1.0, 0).is_ok());
    }

    #[test]
    fn quadratic_adversary_respects_gradient_bound() {
        let env = OnlineEnvironment::sc_quadratic_adversary(3, 4, 100, 1.0, 1.0, 1.0, 5).unwrap();
        let corner = vec![0.25; 4];
        for t in 1..=100 {
            for i in 0..3 {
                assert!(env.loss(t, i).gradient(&corner).norm() <= 1.0 + 1e-12);
            }
        }
    }

    #[test]
    fn convex_lower_bound_structure() {
        let env = OnlineEnvironment::convex_lower_bound(2, 3, 10, 1.0, 1.0, 1.0, 0).unwrap();
        assert_eq!(env.zero_learners(), 1);
        assert_eq!(env.interval_of(1), Some(0));
        assert_eq!(env.interval_of(2), Some(1));
        assert_eq!(
            env.interval_bounds().unwrap(),
            (0..10).chain([10]).collect::<Vec<_>>()
        );
        assert!(env.loss(4, 0).gradient(&[0.0; 3]).iter().all(|v| *v == 0.0));

        let env = OnlineEnvironment::convex_lower_bound(5, 2, 23, 1.0, 1.0, 0.25, 3).unwrap();
        assert_eq!(env.zero_learners(), 2);
        // K = 4, Z = floor(22/4) = 5
        assert_eq!(
            env.interval_bounds().unwrap(),
            vec![0, 4, 8, 12, 16, 20, 23]
        );
        for t in 1..=23 {
            let g = env.loss(t, 3);
            assert_eq!(g, env.loss(t, 4));
            let same_interval = t > 1 && env.interval_of(t) == env.interval_of(t - 1);
            if same_interval {
                assert_eq!(g, env.loss(t - 1, 3));
            }
        }
        let err = OnlineEnvironment::convex_lower_bound(2, 2, 2, 1.0, 1.0, 0.25, 0).unwrap_err();
        assert_eq!(err.field(), Some("T"));
    }

    #[test]
    fn sc_lower_bound_structure() {
        let env = OnlineEnvironment::sc_lower_bound(2, 2, 100, 1.0, 1.0, 0.5, 0.0, 0).unwrap();
        for t in 1..=100 {
            for i in 0..2 {
                let RoundLoss::Quadratic { center, .. } = env.loss(t, i) else {
                    panic!()
                };
                assert!(center.iter().all(|c| *c == 0.0));
            }
        }
        let env = OnlineEnvironment::sc_lower_bound(2, 2, 100, 1.0, 1.0, 0.5, 1.0, 0).unwrap();
        let RoundLoss::Quadratic { center, .. } = env.loss(7, 1) else {
            panic!()
        };
        assert!(center
            .iter()
            .all(|c| (*c - 1.0 / 2f64.sqrt()).abs() < 1e-15));
        assert!(OnlineEnvironment::sc_lower_bound(2, 2, 100, 1.0, 1.0, 0.5, 1.5, 0).is_err());
        assert!(OnlineEnvironment::sc_lower_bound(2, 2, 10, 1.0, 1.0, 0.5, 0.5, 0).is_err());
    }

    #[test]
    fn lad_small_example() {
        let set = FeasibleSet::cube(1, 0.0, 1.0).unwrap();
        let shards = vec![
            vec![DecisionVector::from([0.0])],
            vec![DecisionVector::from([0.4])],
            vec![DecisionVector::from([1.0])],
        ];
        let p = StochasticProblem::from_shards(shards, set, None).unwrap();
        assert!((p.optimum()[0] - 0.4).abs() < 1e-15);
        assert!((p.optimal_value() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn lad_identical_data_has_zero_optimum() {
        let set = FeasibleSet::cube(2, 0.0, 1.0).unwrap();
        let a = DecisionVector::from([0.3, 0.6]);
        let p = StochasticProblem::from_shards(vec![vec![a.clone(); 3]; 2], set, None).unwrap();
        assert_eq!(p.optimal_value(), 0.0);
        assert_eq!(p.optimum(), &a);
    }

    #[test]
    fn lad_subgradient_above_all_data_is_ones() {
        let set = FeasibleSet::cube(3, 0.0, 1.0).unwrap();
        let p = StochasticProblem::lad(2, 3, 4, set, 1).unwrap();
        let x = [1.0 + 1e-9; 3];
        let mut rng = rng::stream(0, 0, 0, 0);
        let g = p.stochastic_subgradient(0, &x, &mut rng);
        assert_eq!(g.as_slice(), &[1.0, 1.0, 1.0]);
        assert!((g.norm() - p.gradient_bound()).abs() < 1e-15);
    }

    #[test]
    fn regularized_optimum_beats_grid() {
        let set = FeasibleSet::cube(2, 0.0, 1.0).unwrap();
        let p = StochasticProblem::lad(3, 2, 5, set, 8)
            .unwrap()
            .with_regularizer(0.5, DecisionVector::filled(2, 0.5))
            .unwrap();
        let f_star = p.optimal_value();
        let steps = 400;
        for a in 0..=steps {
            for b in 0..=steps {
                let x = [a as f64 / steps as f64, b as f64 / steps as f64];
                assert!(p.value(&x) >= f_star - 1e-12);
            }
        }
    }
}
