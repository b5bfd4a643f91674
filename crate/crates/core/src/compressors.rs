//! δ-contractive compressors, the recursive FCC loop and bit accounting.
//!
//! A compressor `C` is δ-contractive when `E||C(x) - x||^2 <= (1 - δ)||x||^2`.
//! Bit costs follow a declared model (64-bit reals, explicit index bits):
//!
//! | variant        | bits                          |
//! |----------------|-------------------------------|
//! | `Identity`     | `64 d`                        |
//! | `RandK(k)`     | `k (64 + ceil(log2 d))`       |
//! | `ScaledSign`   | `d + 64`                      |
//! | `RandomGossip` | `64 d` on success, `1` on failure |

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng::{self, StreamRng};
use crate::vector::DecisionVector;

const REAL_BITS: u64 = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CompressorSpec {
    Identity,
    /// Keep `k` uniformly chosen coordinates, zero the rest. No rescaling.
    RandK(usize),
    /// `(||x||_1 / d) sign(x)` with `sign(0) = +1`.
    ScaledSign,
    /// Transmit `x` intact with probability `p`, else the zero vector.
    RandomGossip(f64),
}

impl CompressorSpec {
    pub fn validate(&self, dim: usize) -> Result<()> {
        match *self {
            CompressorSpec::RandK(k) if k == 0 || k > dim => Err(Error::config(
                "compressor",
                format!("randk needs 1 <= k <= d (k = {k}, d = {dim})"),
            )),
            CompressorSpec::RandomGossip(p) if !(p > 0.0 && p <= 1.0) => Err(Error::config(
                "compressor",
                format!("gossip probability must lie in (0, 1], got {p}"),
            )),
            _ => Ok(()),
        }
    }

    /// The contraction parameter δ this compressor is declared to satisfy.
    pub fn nominal_delta(&self, dim: usize) -> f64 {
        match *self {
            CompressorSpec::Identity => 1.0,
            CompressorSpec::RandK(k) => k as f64 / dim as f64,
            CompressorSpec::ScaledSign => 1.0 / dim as f64,
            CompressorSpec::RandomGossip(p) => p,
        }
    }

    /// Modeled cost of one message. `delivered` only matters for gossip.
    pub fn message_bits(&self, dim: usize, delivered: bool) -> u64 {
        let d = dim as u64;
        match *self {
            CompressorSpec::Identity => REAL_BITS * d,
            CompressorSpec::RandK(k) => k as u64 * (REAL_BITS + index_bits(dim)),
            CompressorSpec::ScaledSign => d + REAL_BITS,
            CompressorSpec::RandomGossip(_) => {
                if delivered {
                    REAL_BITS * d
                } else {
                    1
                }
            }
        }
    }

    /// RandK with `k = round(delta d)`, clamped to `[1, d]`.
    pub fn rand_k_for_delta(dim: usize, delta: f64) -> Self {
        let k = ((delta * dim as f64).round() as usize).clamp(1, dim);
        CompressorSpec::RandK(k)
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, CompressorSpec::Identity)
    }
}

fn index_bits(dim: usize) -> u64 {
    if dim <= 1 {
        0
    } else {
        (usize::BITS - (dim - 1).leading_zeros()) as u64
    }
}

impl fmt::Display for CompressorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CompressorSpec::Identity => write!(f, "identity"),
            CompressorSpec::RandK(k) => write!(f, "randk:{k}"),
            CompressorSpec::ScaledSign => write!(f, "sign"),
            CompressorSpec::RandomGossip(p) => write!(f, "gossip:{p}"),
        }
    }
}

impl FromStr for CompressorSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::config("compressor", format!("unrecognized compressor `{s}`"));
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        match (name, arg) {
            ("identity", None) => Ok(CompressorSpec::Identity),
            ("sign", None) => Ok(CompressorSpec::ScaledSign),
            ("randk", Some(a)) => a.parse().map(CompressorSpec::RandK).map_err(|_| bad()),
            ("gossip", Some(a)) => a
                .parse()
                .map(CompressorSpec::RandomGossip)
                .map_err(|_| bad()),
            _ => Err(bad()),
        }
    }
}

/// Dense reconstruction `C(x)` plus its modeled transmission cost.
#[derive(Debug, Clone, PartialEq)]
pub struct CompressedMessage {
    pub payload: DecisionVector,
    pub bits: u64,
}

pub fn compress(spec: &CompressorSpec, x: &[f64], rng: &mut StreamRng) -> CompressedMessage {
    let dim = x.len();
    match *spec {
        CompressorSpec::Identity => CompressedMessage {
            payload: DecisionVector::from(x),
            bits: spec.message_bits(dim, true),
        },
        CompressorSpec::RandK(k) => {
            let mut payload = DecisionVector::zeros(dim);
            if k >= dim {
                payload.copy_from(x);
            } else {
                for j in index::sample(rng, dim, k) {
                    payload[j] = x[j];
                }
            }
            CompressedMessage {
                payload,
                bits: spec.message_bits(dim, true),
            }
        }
        CompressorSpec::ScaledSign => {
            let scale = x.iter().map(|v| v.abs()).sum::<f64>() / dim as f64;
            let payload = x
                .iter()
                .map(|v| if *v < 0.0 { -scale } else { scale })
                .collect();
            CompressedMessage {
                payload,
                bits: spec.message_bits(dim, true),
            }
        }
        CompressorSpec::RandomGossip(p) => {
            let delivered = p >= 1.0 || rng.random::<f64>() < p;
            let payload = if delivered {
                DecisionVector::from(x)
            } else {
                DecisionVector::zeros(dim)
            };
            CompressedMessage {
                payload,
                bits: spec.message_bits(dim, delivered),
            }
        }
    }
}

/// One FCC transfer of a fixed target, advanced one compression step at a time.
///
/// Starts from `r^1 = 0`; each step sends `c^k = C(x - r^k)` and sets
/// `r^{k+1} = r^k + c^k`.
#[derive(Debug, Clone)]
pub struct FccTransfer {
    target: DecisionVector,
    residual: DecisionVector,
    steps_done: usize,
    steps_total: usize,
    bits: u64,
}

impl FccTransfer {
    pub fn new(target: DecisionVector, steps: usize) -> Self {
        let dim = target.dim();
        FccTransfer {
            target,
            residual: DecisionVector::zeros(dim),
            steps_done: 0,
            steps_total: steps,
            bits: 0,
        }
    }

    pub fn target(&self) -> &DecisionVector {
        &self.target
    }

    /// Partial sum `r^{k}` after the steps taken so far.
    pub fn residual(&self) -> &DecisionVector {
        &self.residual
    }

    pub fn into_residual(self) -> DecisionVector {
        self.residual
    }

    pub fn is_complete(&self) -> bool {
        self.steps_done >= self.steps_total
    }

    pub fn steps_done(&self) -> usize {
        self.steps_done
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    /// Performs the next compression step. Returns `None` once all steps are done.
    pub fn advance(
        &mut self,
        spec: &CompressorSpec,
        rng: &mut StreamRng,
    ) -> Option<CompressedMessage> {
        if self.is_complete() {
            return None;
        }
        let remainder = self.target.sub(&self.residual);
        let msg = compress(spec, &remainder, rng);
        self.residual.add_assign(&msg.payload);
        self.steps_done += 1;
        self.bits += msg.bits;
        Some(msg)
    }
}

/// Result of a full FCC call.
#[derive(Debug, Clone)]
pub struct FccOutcome {
    pub residual_sum: DecisionVector,
    pub messages: Vec<CompressedMessage>,
}

impl FccOutcome {
    pub fn total_bits(&self) -> u64 {
        self.messages.iter().map(|m| m.bits).sum()
    }
}

/// Runs all `rounds` FCC steps on `x` from a single stream.
pub fn fcc(
    x: &[f64],
    spec: &CompressorSpec,
    rounds: usize,
    rng: &mut StreamRng,
) -> Result<FccOutcome> {
    if rounds < 1 {
        return Err(Error::config(
            "L",
            "FCC needs at least one compression round",
        ));
    }
    let mut transfer = FccTransfer::new(DecisionVector::from(x), rounds);
    let mut messages = Vec::with_capacity(rounds);
    while let Some(msg) = transfer.advance(spec, rng) {
        messages.push(msg);
    }
    Ok(FccOutcome {
        residual_sum: transfer.into_residual(),
        messages,
    })
}

/// Mean and standard error of a sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanStat {
    pub mean: f64,
    pub stderr: f64,
}

impl MeanStat {
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        if samples.len() < 2 {
            return MeanStat { mean, stderr: 0.0 };
        }
        let var = samples.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (n - 1.0);
        MeanStat {
            mean,
            stderr: (var / n).sqrt(),
        }
    }
}

/// Monte Carlo estimate of `E||r^{L+1} - x||^2 / ||x||^2` over random unit `x`.
///
/// Trial `i` draws its input and compressor randomness from streams keyed by `i`.
pub fn contraction_stat(
    spec: &CompressorSpec,
    rounds: usize,
    dim: usize,
    trials: usize,
    seed: u64,
) -> Result<MeanStat> {
    if trials < 1 {
        return Err(Error::config("trials", "need at least one trial"));
    }
    spec.validate(dim)?;
    let mut ratios = Vec::with_capacity(trials);
    for trial in 0..trials as u64 {
        let mut data_rng = rng::stream(seed, rng::entity::STAT, trial, 0);
        let mut x: DecisionVector = (0..dim)
            .map(|_| data_rng.sample::<f64, _>(StandardNormal))
            .collect();
        let norm = x.norm();
        if norm == 0.0 {
            ratios.push(0.0);
            continue;
        }
        x.scale(1.0 / norm);
        let mut comp_rng = rng::stream(seed, rng::entity::STAT, trial, 1);
        let out = fcc(&x, spec, rounds, &mut comp_rng)?;
        ratios.push(out.residual_sum.dist_sq(&x) / x.norm_sq());
    }
    Ok(MeanStat::from_samples(&ratios))
}
