//! Seeded Monte-Carlo episodes and experiment grids.
//!
//! An episode pits a strategy against a simulated user until the target shows
//! up in a query or the query cap is reached. Experiments run a grid of
//! episode configurations in parallel; results are ordered by (cell, episode)
//! and depend only on the spec and its master seed.

mod episode;
mod experiment;
mod persist;

pub use episode::{
    default_max_queries, run_episode, EpisodeConfig, EpisodeResult, Round, RoundCheckFailure, RoundGain,
};
pub use experiment::{
    episode_seed, mismatch_sweep, run_experiment, CellResult, DatasetSpec, ExperimentResult, ExperimentSpec,
    ExplicitPoints, Grid, QueryStats, SPEC_VERSION,
};
