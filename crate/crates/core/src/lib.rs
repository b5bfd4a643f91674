//! Distributed online convex optimization with compressed communication.
//!
//! `n` learners and a central server repeatedly play a shared decision against
//! per-learner convex losses. Messages in both directions pass through a
//! δ-contractive compressor; error feedback on both sides and an FTRL update
//! keep the compression error from coupling with the projection.
//!
//! The crate provides
//! - [`domains`]: feasible sets, projection, closed-form FTRL steps, comparators;
//! - [`compressors`]: RandK, scaled sign and random gossip compressors, FCC;
//! - [`environments`]: adversarial online sequences and stochastic LAD problems;
//! - [`algorithms`]: the D-FTCL, D-FTFCL and online-to-batch engines;
//! - [`harness`]: full runs, regret traces, Monte Carlo replication, rate fits;
//! - [`verify`]: empirical checks of the contraction and error-energy bounds;
//! - [`cli`]: the `oco-compress` command-line front end.

pub mod algorithms;
pub mod cli;
pub mod compressors;
pub mod domains;
pub mod environments;
pub mod error;
pub mod harness;
pub mod rng;
pub mod vector;
pub mod verify;

pub use compressors::CompressorSpec;
pub use domains::FeasibleSet;
pub use error::{Error, Result};
pub use vector::DecisionVector;
