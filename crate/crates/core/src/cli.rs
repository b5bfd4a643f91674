//! Command-line front end: `run`, `sweep`, `verify` and `fit`.
//!
//! Every run parameter can be given as a flag or as a key of a TOML
//! experiment file (`--config`); flags win over file values. Exit codes are
//! 0 on success, 1 when a verification fails and 2 on configuration errors.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::algorithms::Weights;
use crate::compressors::{CompressorSpec, MeanStat};
use crate::domains::FeasibleSet;
use crate::error::{Error, Result};
use crate::harness::{fit_rate, monte_carlo, Algorithm, EnvKind, MonteCarloSummary, RunConfig};
use crate::verify::{verify, Lemma, VerifyConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "oco-compress",
    version,
    about = "Distributed online convex optimization with compressed communication"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one configuration and write its (seed-averaged) trace as CSV.
    Run(RunArgs),
    /// Run a delta x T grid and write final values with fitted exponents.
    Sweep(RunArgs),
    /// Check a contraction or error-memory bound.
    Verify(VerifyArgs),
    /// Log-log least squares fit of y against x.
    Fit(FitArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// TOML experiment file; keys are the long flag names.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output file (stdout when absent).
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub experiment: ExperimentFile,
}

/// Experiment parameters, shared by flags and the TOML file format.
#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    /// Number of learners.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Dimension.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    /// Horizon in rounds (required). Sweeps accept a comma-separated list.
    #[arg(long = "T", value_delimiter = ',')]
    #[serde(
        rename = "T",
        default,
        with = "one_or_many",
        skip_serializing_if = "Vec::is_empty"
    )]
    pub horizon: Vec<usize>,
    /// Algorithm: dftcl, dftfcl or o2b.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub algo: Option<String>,
    /// Compressor: identity, randk:K, sign or gossip:P.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub compressor: Option<String>,
    /// Block length / FCC rounds (default ceil(1/delta)).
    #[arg(long = "L")]
    #[serde(rename = "L", skip_serializing_if = "Option::is_none")]
    pub block_len: Option<usize>,
    /// Step size (default: the theory-prescribed value).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    /// Strong convexity; selects the strongly convex update.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    /// Gradient norm bound.
    #[arg(long = "G")]
    #[serde(rename = "G", skip_serializing_if = "Option::is_none")]
    pub gradient_bound: Option<f64>,
    /// Diameter of the feasible set.
    #[arg(long = "D")]
    #[serde(rename = "D", skip_serializing_if = "Option::is_none")]
    pub diameter: Option<f64>,
    /// Feasible set: box:LO:HI or ball:R.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub set: Option<String>,
    /// Environment: linear, quadratic, lb-convex, lb-sc or lad.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub env: Option<String>,
    /// Base seed; all randomness derives from it.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Monte Carlo replications (default 1).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reps: Option<usize>,
    /// Compress only the uplink.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unidirectional: Option<bool>,
    /// Drift of the linear adversary in [0, 1].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub drift: Option<f64>,
    /// Bernoulli parameter of the strongly convex lower bound.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    /// Interval delta of the lower-bound environments (default: the compressor's).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lb_delta: Option<f64>,
    /// Samples per learner of the LAD problem.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    /// Online-to-batch weights: uniform or linear.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weights: Option<String>,
    /// Sweep grid of compression levels; each maps to a compressor of the configured family.
    #[arg(long, value_delimiter = ',')]
    #[serde(default, with = "one_or_many", skip_serializing_if = "Vec::is_empty")]
    pub delta: Vec<f64>,
    /// Monte Carlo worker threads (0 = all cores).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

mod one_or_many {
    use super::*;

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany<T> {
        One(T),
        Many(Vec<T>),
    }

    pub fn serialize<S: Serializer, T: Serialize>(
        v: &[T],
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        match v {
            [one] => one.serialize(s),
            many => many.serialize(s),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>, T: Deserialize<'de>>(
        d: D,
    ) -> std::result::Result<Vec<T>, D::Error> {
        Ok(match OneOrMany::deserialize(d)? {
            OneOrMany::One(x) => vec![x],
            OneOrMany::Many(v) => v,
        })
    }
}

fn parse_field<T: std::str::FromStr>(field: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::config(field, format!("cannot parse `{value}`")))
}

/// Parses `box:LO:HI` or `ball:R` in dimension `d`.
pub fn parse_set(spec: &str, d: usize) -> Result<FeasibleSet> {
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.as_slice() {
        ["box", lo, hi] => FeasibleSet::cube(d, parse_field("set", lo)?, parse_field("set", hi)?),
        ["ball", r] => FeasibleSet::ball(d, parse_field("set", r)?),
        _ => Err(Error::config(
            "set",
            format!("expected box:LO:HI or ball:R, got `{spec}`"),
        )),
    }
    .map_err(|e| match e {
        Error::Config { reason, .. } => Error::config("set", reason),
        other => other,
    })
}

/// Compressor of the same family as `base` with contraction `delta`.
pub fn compressor_for_delta(base: &CompressorSpec, d: usize, delta: f64) -> Result<CompressorSpec> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::config(
            "delta",
            format!("must lie in (0, 1], got {delta}"),
        ));
    }
    Ok(match base {
        CompressorSpec::RandomGossip(_) => CompressorSpec::RandomGossip(delta),
        _ if delta == 1.0 => CompressorSpec::Identity,
        _ => CompressorSpec::rand_k_for_delta(d, delta),
    })
}

impl ExperimentFile {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let msg = e.message().to_string();
            let field = msg
                .split('`')
                .nth(1)
                .map(str::to_string)
                .unwrap_or_else(|| "config".into());
            Error::config(field, msg)
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("experiment files always serialize")
    }

    /// Values of `other` override values of `self`.
    pub fn merged_with(&self, other: &ExperimentFile) -> ExperimentFile {
        macro_rules! pick {
            ($($f:ident),*) => {
                ExperimentFile {
                    $($f: other.$f.clone().or_else(|| self.$f.clone()),)*
                    horizon: if other.horizon.is_empty() { self.horizon.clone() } else { other.horizon.clone() },
                    delta: if other.delta.is_empty() { self.delta.clone() } else { other.delta.clone() },
                }
            };
        }
        pick!(
            n,
            d,
            algo,
            compressor,
            block_len,
            eta,
            mu,
            gradient_bound,
            diameter,
            set,
            env,
            seed,
            reps,
            unidirectional,
            drift,
            p,
            lb_delta,
            samples,
            weights,
            workers
        )
    }

    pub fn reps(&self) -> usize {
        self.reps.unwrap_or(1)
    }

    pub fn workers(&self) -> usize {
        self.workers.unwrap_or(0)
    }

    fn base_config(&self) -> Result<RunConfig> {
        let mut c = RunConfig::default();
        if let Some(v) = self.n {
            c.n = v;
        }
        if let Some(v) = self.d {
            c.d = v;
        }
        if let Some(s) = &self.algo {
            c.algorithm = s.parse::<Algorithm>()?;
        }
        if let Some(s) = &self.env {
            c.env = s.parse::<EnvKind>()?;
        } else if c.algorithm == Algorithm::O2b {
            c.env = EnvKind::Lad;
        }
        if let Some(s) = &self.compressor {
            c.compressor = s.parse()?;
        }
        c.block_len = self.block_len;
        c.eta = self.eta;
        c.mu = self.mu;
        if let Some(v) = self.gradient_bound {
            c.gradient_bound = v;
        }
        c.diameter = self.diameter;
        if let Some(s) = &self.set {
            c.set = Some(parse_set(s, c.d)?);
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = self.unidirectional {
            c.unidirectional = v;
        }
        if let Some(v) = self.drift {
            c.drift = v;
        }
        if let Some(v) = self.p {
            c.p = v;
        }
        c.lb_delta = self.lb_delta;
        if let Some(v) = self.samples {
            c.samples = v;
        }
        if let Some(s) = &self.weights {
            c.weights = match s.as_str() {
                "uniform" => Weights::Uniform,
                "linear" => Weights::Linear,
                _ => {
                    return Err(Error::config(
                        "weights",
                        format!("expected uniform or linear, got `{s}`"),
                    ))
                }
            };
        }
        if self.reps == Some(0) {
            return Err(Error::config("reps", "must be at least 1"));
        }
        Ok(c)
    }

    /// The single run described by this file.
    pub fn run_config(&self) -> Result<RunConfig> {
        let mut c = self.base_config()?;
        c.horizon = match self.horizon.as_slice() {
            [] => return Err(Error::config("T", "missing required key `T`")),
            [t] => *t,
            _ => {
                return Err(Error::config(
                    "T",
                    "`run` takes a single horizon; use `sweep` for grids",
                ))
            }
        };
        if self.delta.len() > 1 {
            return Err(Error::config(
                "delta",
                "`run` takes a single delta; use `sweep` for grids",
            ));
        }
        if let [delta] = self.delta.as_slice() {
            c.compressor = compressor_for_delta(&c.compressor, c.d, *delta)?;
        }
        c.resolve()?;
        Ok(c)
    }

    /// Grid points `(delta, T, config)` in delta-major order.
    pub fn grid(&self) -> Result<Vec<(f64, usize, RunConfig)>> {
        let base = self.base_config()?;
        if self.horizon.is_empty() {
            return Err(Error::config("T", "missing required key `T`"));
        }
        let deltas = if self.delta.is_empty() {
            vec![base.compressor.nominal_delta(base.d)]
        } else {
            self.delta.clone()
        };
        let mut out = Vec::new();
        for &delta in &deltas {
            let compressor = if self.delta.is_empty() {
                base.compressor
            } else {
                compressor_for_delta(&base.compressor, base.d, delta)?
            };
            for &t in &self.horizon {
                let c = RunConfig {
                    horizon: t,
                    compressor,
                    ..base.clone()
                };
                c.resolve()?;
                out.push((delta, t, c));
            }
        }
        Ok(out)
    }
}

fn load(args: &RunArgs) -> Result<ExperimentFile> {
    let file = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| {
                Error::config("config", format!("cannot read {}: {e}", path.display()))
            })?;
            ExperimentFile::from_toml(&text)?
        }
        None => ExperimentFile::default(),
    };
    Ok(file.merged_with(&args.experiment))
}

fn fmt_stat_col(v: &[MeanStat], r: usize) -> String {
    format!("{}", v[r].mean)
}

/// Trace CSV of a (possibly single-replication) Monte Carlo summary.
pub fn summary_csv(s: &MonteCarloSummary) -> String {
    let mut out = String::from("t,cum_loss,comparator,regret,bits_up,bits_down");
    if s.subopt.is_some() {
        out.push_str(",subopt");
    }
    out.push('\n');
    for r in 0..s.t.len() {
        out.push_str(&format!(
            "{},{},{},{},{},{}",
            s.t[r],
            fmt_stat_col(&s.cum_loss, r),
            fmt_stat_col(&s.comparator, r),
            fmt_stat_col(&s.regret, r),
            fmt_stat_col(&s.bits_up, r),
            fmt_stat_col(&s.bits_down, r)
        ));
        if let Some(sub) = &s.subopt {
            out.push_str(&format!(",{}", sub[r].mean));
        }
        out.push('\n');
    }
    out
}

fn emit(path: &Option<PathBuf>, text: &str, out: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text)
            .map_err(|e| Error::config("out", format!("cannot write {}: {e}", p.display()))),
        None => out
            .write_all(text.as_bytes())
            .map_err(|e| Error::Input(format!("cannot write output: {e}"))),
    }
}

pub fn cmd_run(args: &RunArgs, out: &mut dyn Write) -> Result<()> {
    let file = load(args)?;
    let config = file.run_config()?;
    let summary = monte_carlo(&config, file.reps(), file.workers())?;
    emit(&args.out, &summary_csv(&summary), out)
}

/// One sweep row.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub delta: f64,
    pub horizon: usize,
    pub metric: &'static str,
    pub final_value: MeanStat,
    pub t_fit: Option<(f64, f64)>,
    pub delta_fit: Option<(f64, f64)>,
}

pub fn sweep(file: &ExperimentFile) -> Result<Vec<SweepRow>> {
    let grid = file.grid()?;
    let mut rows = Vec::with_capacity(grid.len());
    for (delta, t, config) in grid {
        let summary = monte_carlo(&config, file.reps(), file.workers())?;
        let (metric, final_value) = match summary.final_subopt() {
            Some(s) => ("subopt", s),
            None => ("regret", summary.final_regret()),
        };
        rows.push(SweepRow {
            delta,
            horizon: t,
            metric,
            final_value,
            t_fit: None,
            delta_fit: None,
        });
    }
    let fit = |pts: Vec<(f64, f64)>| -> Option<(f64, f64)> {
        let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
        fit_rate(&xs, &ys).ok().map(|f| (f.exponent, f.r2))
    };
    let snapshot = rows.clone();
    for row in &mut rows {
        row.t_fit = fit(snapshot
            .iter()
            .filter(|r| r.delta == row.delta)
            .map(|r| (r.horizon as f64, r.final_value.mean))
            .collect());
        row.delta_fit = fit(snapshot
            .iter()
            .filter(|r| r.horizon == row.horizon)
            .map(|r| (r.delta, r.final_value.mean))
            .collect());
    }
    Ok(rows)
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let opt = |f: Option<(f64, f64)>, i: usize| {
        f.map(|p| format!("{}", if i == 0 { p.0 } else { p.1 }))
            .unwrap_or_default()
    };
    let mut out =
        String::from("delta,T,metric,final_mean,stderr,T_exponent,T_r2,delta_exponent,delta_r2\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.delta,
            r.horizon,
            r.metric,
            r.final_value.mean,
            r.final_value.stderr,
            opt(r.t_fit, 0),
            opt(r.t_fit, 1),
            opt(r.delta_fit, 0),
            opt(r.delta_fit, 1)
        ));
    }
    out
}

pub fn cmd_sweep(args: &RunArgs, out: &mut dyn Write) -> Result<()> {
    let file = load(args)?;
    let rows = sweep(&file)?;
    emit(&args.out, &sweep_csv(&rows), out)
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// fcc_contraction, dftcl_errors, dftfcl_errors or o2b_errors.
    pub lemma: String,
    /// Compressor under test.
    #[arg(long, default_value = "randk:4")]
    pub compressor: String,
    #[arg(long, default_value_t = 8)]
    pub n: usize,
    #[arg(long, default_value_t = 16)]
    pub d: usize,
    #[arg(long = "T", default_value_t = 2000)]
    pub horizon: usize,
    #[arg(long = "G", default_value_t = 1.0)]
    pub gradient_bound: f64,
    /// Block length or FCC rounds (default ceil(1/delta)).
    #[arg(long = "L")]
    pub block_len: Option<usize>,
    /// Compression rounds probed by fcc_contraction.
    #[arg(long, value_delimiter = ',', default_value = "1,2,4,8,16")]
    pub rounds: Vec<usize>,
    /// Monte Carlo trials of fcc_contraction.
    #[arg(long, default_value_t = 5000)]
    pub trials: usize,
    /// Seeds averaged by the error-memory checks.
    #[arg(long, default_value_t = 50)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
}

/// Returns whether the check passed.
pub fn cmd_verify(args: &VerifyArgs, out: &mut dyn Write) -> Result<bool> {
    let lemma: Lemma = args.lemma.parse()?;
    let config = VerifyConfig {
        compressor: args.compressor.parse()?,
        n: args.n,
        d: args.d,
        horizon: args.horizon,
        gradient_bound: args.gradient_bound,
        seeds: args.reps,
        seed: args.seed,
        rounds: args.block_len,
        contraction_rounds: args.rounds.clone(),
        trials: args.trials,
    };
    let job = || verify(lemma, &config);
    let report = if args.workers == 0 {
        job()?
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(args.workers)
            .build()
            .map_err(|e| Error::config("workers", e.to_string()))?
            .install(job)?
    };
    writeln!(out, "{report}").map_err(|e| Error::Input(e.to_string()))?;
    Ok(report.passed())
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// CSV file to read columns from.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Column used as x (with --csv).
    #[arg(long, default_value = "t")]
    pub x: String,
    /// Column used as y (with --csv).
    #[arg(long, default_value = "regret")]
    pub y: String,
    /// Inline x values.
    #[arg(long, value_delimiter = ',')]
    pub xs: Vec<f64>,
    /// Inline y values.
    #[arg(long, value_delimiter = ',')]
    pub ys: Vec<f64>,
}

fn csv_columns(text: &str, x: &str, y: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| Error::Input("empty csv".into()))?
        .split(',')
        .collect();
    let col = |name: &str, field: &str| {
        header
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::config(field, format!("no column `{name}`")))
    };
    let (ix, iy) = (col(x, "x")?, col(y, "y")?);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for line in lines {
        let cells: Vec<&str> = line.split(',').collect();
        let get = |i: usize| -> Result<f64> {
            cells
                .get(i)
                .and_then(|c| c.trim().parse().ok())
                .ok_or_else(|| Error::Input(format!("bad row `{line}`")))
        };
        xs.push(get(ix)?);
        ys.push(get(iy)?);
    }
    Ok((xs, ys))
}

pub fn cmd_fit(args: &FitArgs, out: &mut dyn Write) -> Result<()> {
    let (xs, ys) = match &args.csv {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| {
                Error::config("csv", format!("cannot read {}: {e}", path.display()))
            })?;
            csv_columns(&text, &args.x, &args.y)?
        }
        None => (args.xs.clone(), args.ys.clone()),
    };
    let f = fit_rate(&xs, &ys)?;
    writeln!(out, "exponent,r2\n{},{}", f.exponent, f.r2).map_err(|e| Error::Input(e.to_string()))
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config { .. } | Error::Dimension { .. } | Error::Input(_) => EXIT_CONFIG,
    }
}

/// Parses `args` (including the program name) and executes the command.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) if e.use_stderr() => {
            let _ = write!(err, "{e}");
            return EXIT_CONFIG;
        }
        Err(e) => {
            let _ = write!(out, "{e}");
            return EXIT_OK;
        }
    };
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a, out).map(|_| true),
        Command::Sweep(a) => cmd_sweep(a, out).map(|_| true),
        Command::Verify(a) => cmd_verify(a, out),
        Command::Fit(a) => cmd_fit(a, out).map(|_| true),
    };
    match result {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_VERIFY_FAILED,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}
