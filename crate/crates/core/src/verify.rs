//! Empirical checks of the contraction and error-memory bounds.
//!
//! Each check reports the measured statistic next to its theoretical bound.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::algorithms::{Dftcl, Dftfcl, Mode, O2b, Weights};
use crate::compressors::{contraction_stat, CompressorSpec, MeanStat};
use crate::domains::FeasibleSet;
use crate::environments::{lower_bound_interval, OnlineEnvironment, StochasticProblem};
use crate::error::{Error, Result};
use crate::rng::replication_seed;

/// Absolute slack for bounds that are exactly zero.
const ZERO_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lemma {
    FccContraction,
    DftclErrors,
    DftfclErrors,
    O2bErrors,
}

impl Lemma {
    pub const ALL: [Lemma; 4] = [
        Lemma::FccContraction,
        Lemma::DftclErrors,
        Lemma::DftfclErrors,
        Lemma::O2bErrors,
    ];
}

impl fmt::Display for Lemma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Lemma::FccContraction => "fcc_contraction",
            Lemma::DftclErrors => "dftcl_errors",
            Lemma::DftfclErrors => "dftfcl_errors",
            Lemma::O2bErrors => "o2b_errors",
        })
    }
}

impl FromStr for Lemma {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Lemma::ALL
            .into_iter()
            .find(|l| l.to_string() == s)
            .ok_or_else(|| Error::config("lemma", format!("unknown lemma `{s}` (fcc_contraction, dftcl_errors, dftfcl_errors, o2b_errors)")))
    }
}

/// One measured quantity against its bound.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckRow {
    pub label: String,
    pub measured: f64,
    pub stderr: f64,
    pub bound: f64,
    /// Slack granted on top of the bound (Monte Carlo error allowance).
    pub allowance: f64,
}

impl CheckRow {
    pub fn margin(&self) -> f64 {
        self.bound + self.allowance - self.measured
    }

    pub fn passed(&self) -> bool {
        self.measured.is_finite() && self.margin() >= -ZERO_SLACK
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub lemma: Lemma,
    pub rows: Vec<CheckRow>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(CheckRow::passed)
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.rows {
            writeln!(
                f,
                "{} {}: measured {:.6} (se {:.2e}) bound {:.6} margin {:.6} {}",
                self.lemma,
                r.label,
                r.measured,
                r.stderr,
                r.bound,
                r.margin(),
                if r.passed() { "PASS" } else { "FAIL" }
            )?;
        }
        write!(
            f,
            "{}: {}",
            self.lemma,
            if self.passed() { "PASS" } else { "FAIL" }
        )
    }
}

/// Parameters shared by the checks. Defaults are the desk-scale settings
/// used by the acceptance suite.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    pub compressor: CompressorSpec,
    pub n: usize,
    pub d: usize,
    pub horizon: usize,
    pub gradient_bound: f64,
    pub seeds: usize,
    pub seed: u64,
    /// FCC rounds (contraction check) or block length; defaults to `ceil(1/delta)`.
    pub rounds: Option<usize>,
    /// Compression rounds probed by the contraction check.
    pub contraction_rounds: Vec<usize>,
    pub trials: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            compressor: CompressorSpec::RandK(4),
            n: 8,
            d: 16,
            horizon: 2000,
            gradient_bound: 1.0,
            seeds: 50,
            seed: 0,
            rounds: None,
            contraction_rounds: vec![1, 2, 4, 8, 16],
            trials: 5000,
        }
    }
}

impl VerifyConfig {
    fn delta(&self) -> f64 {
        self.compressor.nominal_delta(self.d)
    }

    fn block_len(&self) -> usize {
        self.rounds
            .unwrap_or_else(|| lower_bound_interval(self.delta()))
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::config("n", "must be at least 1"));
        }
        if self.horizon == 0 {
            return Err(Error::config("T", "must be at least 1"));
        }
        if self.seeds == 0 {
            return Err(Error::config("reps", "must be at least 1"));
        }
        if let Some(0) = self.rounds {
            return Err(Error::config("L", "must be at least 1"));
        }
        self.compressor.validate(self.d)
    }
}

pub fn verify(lemma: Lemma, config: &VerifyConfig) -> Result<Report> {
    config.validate()?;
    match lemma {
        Lemma::FccContraction => fcc_contraction(config),
        Lemma::DftclErrors => dftcl_errors(config),
        Lemma::DftfclErrors => dftfcl_errors(config),
        Lemma::O2bErrors => o2b_errors(config),
    }
}

/// `E||r^{L+1} - x||^2 / ||x||^2 <= (1 - delta)^L`, allowing three standard errors.
pub fn fcc_contraction(config: &VerifyConfig) -> Result<Report> {
    let delta = config.delta();
    let rows = config
        .contraction_rounds
        .par_iter()
        .map(|&l| {
            let stat =
                contraction_stat(&config.compressor, l, config.d, config.trials, config.seed)?;
            Ok(CheckRow {
                label: format!("L={l}"),
                measured: stat.mean,
                stderr: stat.stderr,
                bound: (1.0 - delta).powi(l as i32),
                allowance: 3.0 * stat.stderr,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Report {
        lemma: Lemma::FccContraction,
        rows,
    })
}

type EnergyPair = (Vec<f64>, Vec<f64>);

/// Pointwise means over seeds of two per-step energies, then the max over steps.
fn max_of_means(per_seed: Vec<EnergyPair>) -> (MeanStat, MeanStat) {
    let steps = per_seed[0].0.len();
    let reduce = |pick: &dyn Fn(&EnergyPair) -> &Vec<f64>| -> MeanStat {
        (0..steps)
            .map(|s| {
                MeanStat::from_samples(&per_seed.iter().map(|p| pick(p)[s]).collect::<Vec<_>>())
            })
            .fold(
                MeanStat {
                    mean: 0.0,
                    stderr: 0.0,
                },
                |a, b| if b.mean > a.mean { b } else { a },
            )
    };
    (reduce(&|p| &p.0), reduce(&|p| &p.1))
}

fn mean_sq<'a>(errors: impl Iterator<Item = &'a crate::vector::DecisionVector>) -> f64 {
    let (sum, count) = errors.fold((0.0, 0usize), |(s, c), e| (s + e.norm_sq(), c + 1));
    sum / count as f64
}

fn linear_env(config: &VerifyConfig, seed: u64) -> Result<OnlineEnvironment> {
    OnlineEnvironment::linear_adversary(
        config.n,
        config.d,
        config.horizon,
        config.gradient_bound,
        2.0,
        seed,
    )
}

fn energy_rows(
    learner: MeanStat,
    server: MeanStat,
    learner_bound: f64,
    server_bound: f64,
    unit: &str,
) -> Vec<CheckRow> {
    vec![
        CheckRow {
            label: format!("max_{unit} mean ||e||^2"),
            measured: learner.mean,
            stderr: learner.stderr,
            bound: learner_bound,
            allowance: 0.0,
        },
        CheckRow {
            label: format!("max_{unit} mean ||e_hat||^2"),
            measured: server.mean,
            stderr: server.stderr,
            bound: server_bound,
            allowance: 0.0,
        },
    ]
}

/// Error memories of D-FTCL on the linear adversary:
/// `E||e_i||^2 <= 4(1-delta)G^2/delta^2` and `E||e_hat||^2 <= 160(1-delta)G^2/delta^4`.
pub fn dftcl_errors(config: &VerifyConfig) -> Result<Report> {
    let delta = config.delta();
    let g2 = config.gradient_bound * config.gradient_bound;
    let per_seed = (0..config.seeds as u64)
        .into_par_iter()
        .map(|r| {
            let seed = replication_seed(config.seed, r);
            let env = linear_env(config, seed)?;
            let eta = delta * 2.0 / (config.gradient_bound * (config.horizon as f64).sqrt());
            let mut alg = Dftcl::new(
                config.n,
                env.set().clone(),
                config.compressor,
                Mode::Convex { eta },
                seed,
            )?;
            let mut learner = Vec::with_capacity(config.horizon);
            let mut server = Vec::with_capacity(config.horizon);
            for _ in 0..config.horizon {
                alg.round(&env);
                learner.push(mean_sq(alg.learners().iter().map(|l| &l.error)));
                server.push(alg.server().error.norm_sq());
            }
            Ok((learner, server))
        })
        .collect::<Result<Vec<_>>>()?;
    let (learner, server) = max_of_means(per_seed);
    Ok(Report {
        lemma: Lemma::DftclErrors,
        rows: energy_rows(
            learner,
            server,
            4.0 * (1.0 - delta) * g2 / (delta * delta),
            160.0 * (1.0 - delta) * g2 / delta.powi(4),
            "t",
        ),
    })
}

/// Block-level error memories of D-FTFCL:
/// `E||e_i^b||^2 <= 4e^2 L^2 G^2` and `E||e_hat^b||^2 <= 120e^2 L^2 G^2`.
pub fn dftfcl_errors(config: &VerifyConfig) -> Result<Report> {
    let l = config.block_len();
    let blocks = config.horizon / l;
    if blocks == 0 {
        return Err(Error::config(
            "T",
            format!("must cover at least one block of L = {l} rounds"),
        ));
    }
    let g2 = config.gradient_bound * config.gradient_bound;
    let e2 = std::f64::consts::E * std::f64::consts::E;
    let lf = l as f64;
    let per_seed = (0..config.seeds as u64)
        .into_par_iter()
        .map(|r| {
            let seed = replication_seed(config.seed, r);
            let env = linear_env(config, seed)?;
            let eta = 2.0 / (config.gradient_bound * (lf * config.horizon as f64).sqrt());
            let mut alg = Dftfcl::new(
                config.n,
                env.set().clone(),
                config.compressor,
                l,
                Mode::Convex { eta },
                seed,
            )?;
            let mut learner = Vec::with_capacity(blocks);
            let mut server = Vec::with_capacity(blocks);
            for _ in 0..blocks {
                alg.block(&env);
                learner.push(mean_sq(alg.learner_errors()));
                server.push(alg.server().error.norm_sq());
            }
            Ok((learner, server))
        })
        .collect::<Result<Vec<_>>>()?;
    let (learner, server) = max_of_means(per_seed);
    Ok(Report {
        lemma: Lemma::DftfclErrors,
        rows: energy_rows(
            learner,
            server,
            4.0 * e2 * lf * lf * g2,
            120.0 * e2 * lf * lf * g2,
            "b",
        ),
    })
}

/// Error memories of the online-to-batch conversion on a LAD problem with
/// uniform weights: `E||e_i||^2 <= 4e^2 G^2` and `E||e_hat||^2 <= 120e^2 G^2`,
/// with `G` the LAD subgradient bound.
pub fn o2b_errors(config: &VerifyConfig) -> Result<Report> {
    let l = config.block_len();
    let updates = config.horizon / l;
    if updates == 0 {
        return Err(Error::config(
            "T",
            format!("must cover at least one FCC transfer of L = {l} rounds"),
        ));
    }
    let set = FeasibleSet::cube(config.d, 0.0, 1.0)?;
    let g =
        StochasticProblem::lad(config.n, config.d, 32, set.clone(), config.seed)?.gradient_bound();
    let e2 = std::f64::consts::E * std::f64::consts::E;
    let per_seed = (0..config.seeds as u64)
        .into_par_iter()
        .map(|r| {
            let seed = replication_seed(config.seed, r);
            let problem = StochasticProblem::lad(config.n, config.d, 32, set.clone(), seed)?;
            let eta = set.diameter() / (g * (updates as f64).sqrt());
            let mut alg = O2b::new(
                config.n,
                set.clone(),
                config.compressor,
                l,
                Mode::Convex { eta },
                Weights::Uniform,
                seed,
            )?;
            let mut learner = Vec::with_capacity(updates);
            let mut server = Vec::with_capacity(updates);
            for _ in 0..updates {
                alg.step(&problem);
                learner.push(mean_sq(alg.learners().iter().map(|s| &s.error)));
                server.push(alg.server().error.norm_sq());
            }
            Ok((learner, server))
        })
        .collect::<Result<Vec<_>>>()?;
    let (learner, server) = max_of_means(per_seed);
    Ok(Report {
        lemma: Lemma::O2bErrors,
        rows: energy_rows(learner, server, 4.0 * e2 * g * g, 120.0 * e2 * g * g, "t"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(compressor: CompressorSpec) -> VerifyConfig {
        VerifyConfig {
            compressor,
            horizon: 100,
            seeds: 3,
            trials: 200,
            ..VerifyConfig::default()
        }
    }

    #[test]
    fn identity_contraction_is_exact() {
        let r = verify(Lemma::FccContraction, &small(CompressorSpec::Identity)).unwrap();
        assert!(r.passed());
        assert!(r
            .rows
            .iter()
            .all(|row| row.measured == 0.0 && row.bound == 0.0));
    }

    #[test]
    fn identity_memories_stay_zero() {
        for lemma in [Lemma::DftclErrors, Lemma::DftfclErrors, Lemma::O2bErrors] {
            let r = verify(lemma, &small(CompressorSpec::Identity)).unwrap();
            assert!(r.passed(), "{r}");
            assert!(r.rows.iter().all(|row| row.measured == 0.0));
        }
        let r = verify(Lemma::DftclErrors, &small(CompressorSpec::Identity)).unwrap();
        assert!(r.rows.iter().all(|row| row.bound == 0.0));
    }

    #[test]
    fn lemma_ids_round_trip() {
        for l in Lemma::ALL {
            assert_eq!(l.to_string().parse::<Lemma>().unwrap(), l);
        }
        assert!("nope".parse::<Lemma>().is_err());
    }
}
