//! Noisy search under the comparative feedback model.
//!
//! A hidden target is one of `n` data points. Each round the searcher shows
//! `k` of them; the (simulated or human) user either recognises the target or
//! picks one of the shown points with probability proportional to its
//! similarity to the target. This crate tracks the Bayesian posterior over the
//! target, implements several query-selection strategies, builds the
//! adversarial point set on which large `k` barely helps, evaluates the
//! closed-form query-complexity bounds and runs seeded Monte-Carlo experiments.
//!
//! Indices are 0-based inside the library. Every serialized surface (result
//! files, transcripts, the HTTP API) uses 1-based indices.

pub mod adversarial;
pub mod analysis;
pub mod error;
pub mod feedback;
pub mod harness;
pub mod strategies;

pub use error::{Error, Result};
pub use feedback::{
    entropy, expected_info_gain, kl_divergence, marginal_response_probs, Dataset, Family, Norm, Posterior, Query,
    ResponseDistribution, UserModel,
};
pub use strategies::{select_query, Selection, StrategyError, StrategyKind};
