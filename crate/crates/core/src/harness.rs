//! Full runs, regret traces, Monte Carlo replication and log-log rate fits.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::algorithms::{surrogate_value, Dftcl, Dftfcl, Mode, O2b, Weights};
use crate::compressors::{CompressorSpec, MeanStat};
use crate::domains::{
    best_in_hindsight, Comparator, FeasibleSet, LossAccumulator, LossDescription,
};
use crate::environments::{lower_bound_interval, OnlineEnvironment, RoundLoss, StochasticProblem};
use crate::error::{Error, Result};
use crate::rng::replication_seed;
use crate::vector::DecisionVector;

/// Traces up to this horizon keep one row per round.
pub const DENSE_TRACE_LIMIT: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Dftcl,
    Dftfcl,
    O2b,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Dftcl => "dftcl",
            Algorithm::Dftfcl => "dftfcl",
            Algorithm::O2b => "o2b",
        })
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dftcl" => Ok(Algorithm::Dftcl),
            "dftfcl" => Ok(Algorithm::Dftfcl),
            "o2b" => Ok(Algorithm::O2b),
            _ => Err(Error::config(
                "algo",
                format!("unknown algorithm `{s}` (dftcl, dftfcl, o2b)"),
            )),
        }
    }
}

/// Loss environment of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvKind {
    /// Sign adversary with optional drift.
    Linear,
    /// Strongly convex quadratic adversary.
    Quadratic,
    /// Convex lower-bound construction.
    LowerBoundConvex,
    /// Strongly convex lower-bound construction.
    LowerBoundSc,
    /// Stochastic least absolute deviation (online-to-batch runs).
    Lad,
}

impl fmt::Display for EnvKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EnvKind::Linear => "linear",
            EnvKind::Quadratic => "quadratic",
            EnvKind::LowerBoundConvex => "lb-convex",
            EnvKind::LowerBoundSc => "lb-sc",
            EnvKind::Lad => "lad",
        })
    }
}

impl FromStr for EnvKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(EnvKind::Linear),
            "quadratic" => Ok(EnvKind::Quadratic),
            "lb-convex" => Ok(EnvKind::LowerBoundConvex),
            "lb-sc" => Ok(EnvKind::LowerBoundSc),
            "lad" => Ok(EnvKind::Lad),
            _ => Err(Error::config(
                "env",
                format!("unknown environment `{s}` (linear, quadratic, lb-convex, lb-sc, lad)"),
            )),
        }
    }
}

/// Parameters of one run. Unset optional values fall back to the
/// theory-prescribed defaults documented on [`RunConfig::resolve`].
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub n: usize,
    pub d: usize,
    pub horizon: usize,
    pub algorithm: Algorithm,
    pub compressor: CompressorSpec,
    pub block_len: Option<usize>,
    pub eta: Option<f64>,
    pub mu: Option<f64>,
    pub gradient_bound: f64,
    pub diameter: Option<f64>,
    pub set: Option<FeasibleSet>,
    pub env: EnvKind,
    pub seed: u64,
    pub unidirectional: bool,
    /// Drift of the linear adversary, 0 for the uniform sign distribution.
    pub drift: f64,
    /// Bernoulli parameter of the strongly convex lower bound.
    pub p: f64,
    /// δ of the lower-bound interval structure; defaults to the compressor's.
    pub lb_delta: Option<f64>,
    /// Samples per learner of the LAD problem.
    pub samples: usize,
    pub weights: Weights,
    /// Keep every played decision in the trace.
    pub record_decisions: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            n: 8,
            d: 16,
            horizon: 1000,
            algorithm: Algorithm::Dftcl,
            compressor: CompressorSpec::Identity,
            block_len: None,
            eta: None,
            mu: None,
            gradient_bound: 1.0,
            diameter: None,
            set: None,
            env: EnvKind::Linear,
            seed: 0,
            unidirectional: false,
            drift: 0.0,
            p: 0.5,
            lb_delta: None,
            samples: 32,
            weights: Weights::Uniform,
            record_decisions: false,
        }
    }
}

/// Loss source of a resolved run.
#[derive(Debug, Clone)]
pub enum Workload {
    Online(OnlineEnvironment),
    Stochastic(StochasticProblem),
}

/// A validated configuration with every default filled in.
#[derive(Debug, Clone)]
pub struct ResolvedRun {
    pub config: RunConfig,
    pub workload: Workload,
    pub mode: Mode,
    pub block_len: usize,
    pub delta: f64,
    pub gradient_bound: f64,
    pub diameter: f64,
}

impl ResolvedRun {
    pub fn set(&self) -> &FeasibleSet {
        match &self.workload {
            Workload::Online(env) => env.set(),
            Workload::Stochastic(p) => p.set(),
        }
    }
}

impl RunConfig {
    /// Validates the configuration and fills in defaults.
    ///
    /// - `L` defaults to `ceil(1/δ)` for D-FTFCL and online-to-batch, and is 1 for D-FTCL.
    /// - `eta` defaults to `δD/(G sqrt T)` for D-FTCL, `D/(G sqrt(LT))` for D-FTFCL and
    ///   `D/(G sqrt K)` with `K = floor(T/L)` for online-to-batch.
    /// - Strongly convex environments (and LAD with linear weights) need `mu`.
    pub fn resolve(&self) -> Result<ResolvedRun> {
        if self.n == 0 {
            return Err(Error::config("n", "must be at least 1"));
        }
        if self.d == 0 {
            return Err(Error::config("d", "must be at least 1"));
        }
        if self.horizon == 0 {
            return Err(Error::config("T", "must be at least 1"));
        }
        if !(self.gradient_bound > 0.0 && self.gradient_bound.is_finite()) {
            return Err(Error::config("G", "must be positive"));
        }
        self.compressor.validate(self.d)?;
        if let Some(set) = &self.set {
            if set.dim() != self.d {
                return Err(Error::config(
                    "set",
                    format!("has dimension {}, expected d = {}", set.dim(), self.d),
                ));
            }
        }
        if let Some(dm) = self.diameter {
            if !(dm > 0.0 && dm.is_finite()) {
                return Err(Error::config("D", "must be positive"));
            }
        }
        if let Some(0) = self.block_len {
            return Err(Error::config("L", "must be at least 1"));
        }
        if let Some(eta) = self.eta {
            if !(eta > 0.0 && eta.is_finite()) {
                return Err(Error::config("eta", "must be positive"));
            }
        }
        if let Some(mu) = self.mu {
            if !(mu > 0.0 && mu.is_finite()) {
                return Err(Error::config("mu", "must be positive"));
            }
        }
        let delta = self.compressor.nominal_delta(self.d);
        let block_len = match self.algorithm {
            Algorithm::Dftcl => 1,
            _ => self
                .block_len
                .unwrap_or_else(|| lower_bound_interval(delta)),
        };
        if self.algorithm == Algorithm::O2b && self.env != EnvKind::Lad {
            return Err(Error::config(
                "env",
                "online-to-batch runs need the `lad` environment",
            ));
        }
        if self.algorithm != Algorithm::O2b && self.env == EnvKind::Lad {
            return Err(Error::config(
                "env",
                "the `lad` environment is only used by `o2b`",
            ));
        }
        if self.algorithm == Algorithm::Dftfcl && self.horizon < block_len {
            return Err(Error::config(
                "T",
                format!("must cover at least one block of L = {block_len} rounds"),
            ));
        }
        let require_mu = || {
            self.mu
                .ok_or_else(|| Error::config("mu", "required for strongly convex runs"))
        };
        let diameter_or = |default: f64| -> f64 {
            self.diameter
                .or_else(|| self.set.as_ref().map(|s| s.diameter()))
                .unwrap_or(default)
        };
        let forced_set = |name: &str| -> Result<()> {
            if self.set.is_some() {
                return Err(Error::config(
                    "set",
                    format!("the `{name}` environment fixes its own feasible set"),
                ));
            }
            Ok(())
        };
        let lb_delta = self.lb_delta.unwrap_or(delta);

        let (workload, strongly_convex, g, dm) = match self.env {
            EnvKind::Linear => {
                let dm = diameter_or(2.0);
                let set = match &self.set {
                    Some(s) => s.clone(),
                    None => FeasibleSet::centered_cube_with_diameter(self.d, dm)?,
                };
                let env = OnlineEnvironment::linear_adversary_on(
                    self.n,
                    self.d,
                    self.horizon,
                    self.gradient_bound,
                    set,
                    self.drift,
                    self.seed,
                )?;
                let dm = env.set().diameter();
                (Workload::Online(env), None, self.gradient_bound, dm)
            }
            EnvKind::Quadratic => {
                let mu = require_mu()?;
                let dm = diameter_or(1.0);
                let set = match &self.set {
                    Some(s) => s.clone(),
                    None => FeasibleSet::centered_cube_with_diameter(self.d, dm)?,
                };
                let env = OnlineEnvironment::sc_quadratic_adversary_on(
                    self.n,
                    self.d,
                    self.horizon,
                    mu,
                    self.gradient_bound,
                    set,
                    self.seed,
                )?;
                let dm = env.set().diameter();
                (Workload::Online(env), Some(mu), self.gradient_bound, dm)
            }
            EnvKind::LowerBoundConvex => {
                forced_set("lb-convex")?;
                let dm = self.diameter.unwrap_or(2.0);
                let env = OnlineEnvironment::convex_lower_bound(
                    self.n,
                    self.d,
                    self.horizon,
                    self.gradient_bound,
                    dm,
                    lb_delta,
                    self.seed,
                )?;
                (Workload::Online(env), None, self.gradient_bound, dm)
            }
            EnvKind::LowerBoundSc => {
                forced_set("lb-sc")?;
                let mu = require_mu()?;
                let dm = self.diameter.unwrap_or(1.0);
                let env = OnlineEnvironment::sc_lower_bound(
                    self.n,
                    self.d,
                    self.horizon,
                    mu,
                    dm,
                    lb_delta,
                    self.p,
                    self.seed,
                )?;
                let g = env.gradient_bound();
                (Workload::Online(env), Some(mu), g, dm)
            }
            EnvKind::Lad => {
                let set = match &self.set {
                    Some(s) => s.clone(),
                    None => FeasibleSet::cube(self.d, 0.0, 1.0)?,
                };
                let mut problem =
                    StochasticProblem::lad(self.n, self.d, self.samples, set.clone(), self.seed)?;
                let sc = match self.weights {
                    Weights::Linear => {
                        let mu = require_mu()?;
                        let FeasibleSet::Box { lo, hi } = &set else {
                            unreachable!("checked by lad()")
                        };
                        let center: DecisionVector =
                            lo.iter().zip(hi).map(|(l, h)| 0.5 * (l + h)).collect();
                        problem = problem.with_regularizer(mu, center)?;
                        Some(mu)
                    }
                    Weights::Uniform => None,
                };
                let g = problem.gradient_bound();
                let dm = set.diameter();
                (Workload::Stochastic(problem), sc, g, dm)
            }
        };

        let mode = match strongly_convex {
            Some(mu) => Mode::StronglyConvex { mu },
            None => {
                let horizon = self.horizon as f64;
                let eta = self.eta.unwrap_or_else(|| match self.algorithm {
                    Algorithm::Dftcl => delta * dm / (g * horizon.sqrt()),
                    Algorithm::Dftfcl => dm / (g * (block_len as f64 * horizon).sqrt()),
                    Algorithm::O2b => {
                        let k = (self.horizon / block_len).max(1) as f64;
                        dm / (g * k.sqrt())
                    }
                });
                Mode::Convex { eta }
            }
        };
        if self.algorithm == Algorithm::O2b && self.horizon < block_len {
            return Err(Error::config(
                "T",
                format!("must cover at least one FCC transfer of L = {block_len} rounds"),
            ));
        }
        Ok(ResolvedRun {
            config: self.clone(),
            workload,
            mode,
            block_len,
            delta,
            gradient_bound: g,
            diameter: dm,
        })
    }
}

/// Per-round record of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretTrace {
    /// Round index (update index for online-to-batch runs).
    pub t: Vec<usize>,
    /// `sum_{k<=t} (1/n) sum_i f_i^k(w^k)`.
    pub cum_loss: Vec<f64>,
    /// `min_w sum_{k<=t} (1/n) sum_i f_i^k(w)`.
    pub comparator: Vec<f64>,
    pub regret: Vec<f64>,
    pub bits_up: Vec<u64>,
    pub bits_down: Vec<u64>,
    /// `f(x^t) - f*` for online-to-batch runs.
    pub subopt: Option<Vec<f64>>,
    pub approx_comparator: bool,
    /// Best decision in hindsight over the whole run.
    pub final_comparator: Comparator,
    pub gradient_violations: usize,
    /// Played decisions when `record_decisions` is set.
    pub decisions: Vec<DecisionVector>,
}

impl RegretTrace {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn final_regret(&self) -> f64 {
        *self.regret.last().expect("traces have at least one row")
    }

    pub fn final_subopt(&self) -> Option<f64> {
        self.subopt.as_ref().and_then(|s| s.last().copied())
    }

    /// CSV with header `t,cum_loss,comparator,regret,bits_up,bits_down[,subopt]`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,cum_loss,comparator,regret,bits_up,bits_down");
        if self.subopt.is_some() {
            out.push_str(",subopt");
        }
        out.push('\n');
        for r in 0..self.t.len() {
            out.push_str(&format!(
                "{},{:e},{:e},{:e},{},{}",
                self.t[r],
                self.cum_loss[r],
                self.comparator[r],
                self.regret[r],
                self.bits_up[r],
                self.bits_down[r]
            ));
            if let Some(s) = &self.subopt {
                out.push_str(&format!(",{:e}", s[r]));
            }
            out.push('\n');
        }
        out
    }
}

/// Rows kept for a horizon: all of them up to [`DENSE_TRACE_LIMIT`], else the
/// first 1024 plus a geometric grid with ratio `1 + 1/1024`, plus the last.
pub fn recorded_rows(horizon: usize) -> impl Fn(usize) -> bool {
    let mut keep = vec![horizon <= DENSE_TRACE_LIMIT; horizon + 1];
    if horizon > DENSE_TRACE_LIMIT {
        keep[1..=1024].iter_mut().for_each(|k| *k = true);
        let mut g = 1024usize;
        while g <= horizon {
            keep[g] = true;
            g = (g + g / 1024).max(g + 1);
        }
        keep[horizon] = true;
    }
    move |t: usize| keep.get(t).copied().unwrap_or(false)
}

struct TraceBuilder {
    keep: Box<dyn Fn(usize) -> bool>,
    acc: LossAccumulator,
    set: FeasibleSet,
    trace: RegretTrace,
    cum_loss: f64,
    bits_up: u64,
    bits_down: u64,
    record_decisions: bool,
}

impl TraceBuilder {
    fn new(set: &FeasibleSet, horizon: usize, with_subopt: bool, record_decisions: bool) -> Self {
        TraceBuilder {
            keep: Box::new(recorded_rows(horizon)),
            acc: LossAccumulator::new(set.dim()),
            set: set.clone(),
            trace: RegretTrace {
                t: Vec::new(),
                cum_loss: Vec::new(),
                comparator: Vec::new(),
                regret: Vec::new(),
                bits_up: Vec::new(),
                bits_down: Vec::new(),
                subopt: with_subopt.then(Vec::new),
                approx_comparator: false,
                final_comparator: Comparator {
                    point: DecisionVector::zeros(set.dim()),
                    value: 0.0,
                    approximate: false,
                },
                gradient_violations: 0,
                decisions: Vec::new(),
            },
            cum_loss: 0.0,
            bits_up: 0,
            bits_down: 0,
            record_decisions,
        }
    }

    /// Records one round of averaged losses at decision `w`.
    fn online_round(
        &mut self,
        t: usize,
        w: &DecisionVector,
        losses: &[RoundLoss],
        bits: (u64, u64),
        g_bound: f64,
    ) {
        let n = losses.len() as f64;
        let mut mean_grad = DecisionVector::zeros(w.dim());
        let mut loss = 0.0;
        for l in losses {
            loss += l.value(w);
            l.accumulate(&mut self.acc, 1.0 / n);
            let g = l.gradient(w);
            if g.norm() > g_bound * (1.0 + 1e-9) {
                self.trace.gradient_violations += 1;
            }
            mean_grad.axpy(1.0 / n, &g);
        }
        if mean_grad.norm() > g_bound * (1.0 + 1e-9) {
            self.trace.gradient_violations += 1;
        }
        self.cum_loss += loss / n;
        self.push(t, w, bits, None);
    }

    fn push(&mut self, t: usize, w: &DecisionVector, bits: (u64, u64), subopt: Option<f64>) {
        self.bits_up += bits.0;
        self.bits_down += bits.1;
        if self.record_decisions {
            self.trace.decisions.push(w.clone());
        }
        if (self.keep)(t) {
            let c = best_in_hindsight(&self.set, LossDescription::Accumulated(&self.acc))
                .expect("accumulator matches the set");
            self.trace.t.push(t);
            self.trace.cum_loss.push(self.cum_loss);
            self.trace.comparator.push(c.value);
            self.trace.regret.push(self.cum_loss - c.value);
            self.trace.bits_up.push(self.bits_up);
            self.trace.bits_down.push(self.bits_down);
            if let (Some(col), Some(v)) = (self.trace.subopt.as_mut(), subopt) {
                col.push(v);
            }
        }
    }

    fn finish(mut self) -> RegretTrace {
        let c = best_in_hindsight(&self.set, LossDescription::Accumulated(&self.acc))
            .expect("accumulator matches the set");
        self.trace.approx_comparator = c.approximate;
        self.trace.final_comparator = c;
        self.trace
    }
}

/// Executes one run.
pub fn run(config: &RunConfig) -> Result<RegretTrace> {
    let resolved = config.resolve()?;
    Ok(run_resolved(&resolved))
}

pub fn run_resolved(r: &ResolvedRun) -> RegretTrace {
    let c = &r.config;
    match (&r.workload, c.algorithm) {
        (Workload::Online(env), Algorithm::Dftcl) => {
            let build = if c.unidirectional {
                Dftcl::unidirectional
            } else {
                Dftcl::new
            };
            let mut alg =
                build(c.n, env.set().clone(), c.compressor, r.mode, c.seed).expect("resolved");
            let mut tb = TraceBuilder::new(env.set(), c.horizon, false, c.record_decisions);
            for t in 1..=c.horizon {
                let (losses, out) = alg.round(env);
                tb.online_round(
                    t,
                    &out.decision,
                    &losses,
                    (out.comms.bits_up, out.comms.bits_down),
                    r.gradient_bound,
                );
            }
            tb.finish()
        }
        (Workload::Online(env), Algorithm::Dftfcl) => {
            let build = if c.unidirectional {
                Dftfcl::unidirectional
            } else {
                Dftfcl::new
            };
            let mut alg = build(
                c.n,
                env.set().clone(),
                c.compressor,
                r.block_len,
                r.mode,
                c.seed,
            )
            .expect("resolved");
            let mut tb = TraceBuilder::new(env.set(), c.horizon, false, c.record_decisions);
            let full_rounds = (c.horizon / r.block_len) * r.block_len;
            for t in 1..=full_rounds {
                let (losses, out) = alg.round(env);
                tb.online_round(
                    t,
                    &out.decision,
                    &losses,
                    (out.comms.bits_up, out.comms.bits_down),
                    r.gradient_bound,
                );
            }
            // tail rounds replay the last decision without communication
            let w = alg.decision().clone();
            for t in full_rounds + 1..=c.horizon {
                let losses = env.round_losses(t);
                tb.online_round(t, &w, &losses, (0, 0), r.gradient_bound);
            }
            tb.finish()
        }
        (Workload::Stochastic(problem), Algorithm::O2b) => {
            let build = if c.unidirectional {
                O2b::unidirectional
            } else {
                O2b::new
            };
            let mut alg = build(
                c.n,
                problem.set().clone(),
                c.compressor,
                r.block_len,
                r.mode,
                c.weights,
                c.seed,
            )
            .expect("resolved");
            let updates = c.horizon / r.block_len;
            let mut tb = TraceBuilder::new(problem.set(), updates, true, c.record_decisions);
            let f_star = problem.optimal_value();
            for k in 1..=updates {
                let out = alg.step(problem);
                for g in out.surrogate.iter().take(c.n) {
                    if let RoundLoss::Linear(coef) = g {
                        if coef.norm() > out.weight * r.gradient_bound * (1.0 + 1e-9) {
                            tb.trace.gradient_violations += 1;
                        }
                    }
                }
                let value = surrogate_value(&out, c.n, &out.decision);
                tb.cum_loss += value;
                for (i, l) in out.surrogate.iter().enumerate() {
                    let weight = if i < c.n { 1.0 / c.n as f64 } else { 1.0 };
                    l.accumulate(&mut tb.acc, weight);
                }
                let subopt = problem.value(&out.iterate) - f_star;
                tb.push(
                    k,
                    &out.decision,
                    (out.comms.bits_up, out.comms.bits_down),
                    Some(subopt),
                );
            }
            tb.finish()
        }
        _ => unreachable!("algorithm/environment pairing is validated in resolve"),
    }
}

/// Pointwise mean and standard error of replicated traces.
#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloSummary {
    pub t: Vec<usize>,
    pub cum_loss: Vec<MeanStat>,
    pub comparator: Vec<MeanStat>,
    pub regret: Vec<MeanStat>,
    pub bits_up: Vec<MeanStat>,
    pub bits_down: Vec<MeanStat>,
    pub subopt: Option<Vec<MeanStat>>,
    pub seeds: Vec<u64>,
}

impl MonteCarloSummary {
    pub fn final_regret(&self) -> MeanStat {
        *self.regret.last().expect("non-empty")
    }

    pub fn final_subopt(&self) -> Option<MeanStat> {
        self.subopt.as_ref().and_then(|s| s.last().copied())
    }
}

fn pointwise<F>(traces: &[RegretTrace], f: F) -> Vec<MeanStat>
where
    F: Fn(&RegretTrace, usize) -> f64,
{
    let rows = traces[0].len();
    (0..rows)
        .map(|r| {
            let col: Vec<f64> = traces.iter().map(|tr| f(tr, r)).collect();
            MeanStat::from_samples(&col)
        })
        .collect()
}

/// Replicates a run `reps` times. Replication `r` uses seed
/// `replication_seed(config.seed, r)`. `workers = 0` uses rayon's global pool.
pub fn monte_carlo(config: &RunConfig, reps: usize, workers: usize) -> Result<MonteCarloSummary> {
    let traces = replicate(config, reps, workers)?;
    Ok(summarize(
        &traces,
        (0..reps as u64)
            .map(|r| replication_seed(config.seed, r))
            .collect(),
    ))
}

/// The individual traces behind [`monte_carlo`].
pub fn replicate(config: &RunConfig, reps: usize, workers: usize) -> Result<Vec<RegretTrace>> {
    if reps < 1 {
        return Err(Error::config("reps", "must be at least 1"));
    }
    config.resolve()?;
    let job = || -> Result<Vec<RegretTrace>> {
        (0..reps as u64)
            .into_par_iter()
            .map(|r| {
                let mut c = config.clone();
                c.seed = replication_seed(config.seed, r);
                run(&c)
            })
            .collect()
    };
    if workers == 0 {
        job()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::config("workers", e.to_string()))?
            .install(job)
    }
}

pub fn summarize(traces: &[RegretTrace], seeds: Vec<u64>) -> MonteCarloSummary {
    MonteCarloSummary {
        t: traces[0].t.clone(),
        cum_loss: pointwise(traces, |tr, r| tr.cum_loss[r]),
        comparator: pointwise(traces, |tr, r| tr.comparator[r]),
        regret: pointwise(traces, |tr, r| tr.regret[r]),
        bits_up: pointwise(traces, |tr, r| tr.bits_up[r] as f64),
        bits_down: pointwise(traces, |tr, r| tr.bits_down[r] as f64),
        subopt: traces[0]
            .subopt
            .is_some()
            .then(|| pointwise(traces, |tr, r| tr.subopt.as_ref().unwrap()[r])),
        seeds,
    }
}

/// Least-squares fit of `log y = exponent * log x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub exponent: f64,
    pub intercept: f64,
    pub r2: f64,
}

pub fn fit_rate(xs: &[f64], ys: &[f64]) -> Result<RateFit> {
    if xs.len() != ys.len() {
        return Err(Error::Input("xs and ys differ in length".into()));
    }
    if xs.len() < 3 {
        return Err(Error::Input("need at least three points".into()));
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::Input("rate fits need positive finite values".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let m = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / m;
    let my = ly.iter().sum::<f64>() / m;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::Input("xs must not all be equal".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ly.iter().map(|y| (y - my) * (y - my)).sum();
    let exponent = sxy / sxx;
    let intercept = my - exponent * mx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy) / (sxx * syy)
    };
    Ok(RateFit {
        exponent,
        intercept,
        r2,
    })
}
