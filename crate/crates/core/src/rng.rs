//! Named, splittable random streams.
//!
//! Every random draw in a run comes from a stream keyed by
//! `(global_seed, entity, round, step)`. Keys are mixed with SplitMix64 so
//! distinct keys give statistically independent ChaCha streams, and any
//! draw can be reproduced without replaying the ones before it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Entity namespaces. Kept disjoint so environment and compressor draws never
/// share a stream.
pub mod entity {
    pub const ENV: u64 = 1 << 40;
    pub const ENV_SHARED: u64 = 2 << 40;
    pub const LEARNER_UPLINK: u64 = 3 << 40;
    pub const SERVER_DOWNLINK: u64 = 4 << 40;
    pub const ORACLE: u64 = 5 << 40;
    pub const DATA: u64 = 6 << 40;
    pub const STAT: u64 = 7 << 40;

    pub fn learner(ns: u64, index: usize) -> u64 {
        ns | index as u64
    }
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Order-sensitive hash of a sequence of words.
pub fn hash_words(words: &[u64]) -> u64 {
    let mut h = 0x243F_6A88_85A3_08D3u64;
    for &w in words {
        h = splitmix64(h ^ splitmix64(w));
    }
    h
}

pub fn stream_id(global_seed: u64, entity: u64, round: u64, step: u64) -> u64 {
    hash_words(&[global_seed, entity, round, step])
}

pub fn stream(global_seed: u64, entity: u64, round: u64, step: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(stream_id(global_seed, entity, round, step))
}

/// Seed for Monte Carlo replication `rep` of a base seed.
pub fn replication_seed(base_seed: u64, rep: u64) -> u64 {
    hash_words(&[base_seed, 0x5EED_0000_0000_0000, rep])
}
