//! Similarities, user-response distributions, Bayesian posterior updates and
//! the entropy/KL utilities used to measure information gain.
//!
//! All logarithms are base 2, so entropies and gains are in bits.

mod dataset;
mod info;
mod model;
mod posterior;

pub use dataset::{Dataset, NeighborTable, Norm};
pub use info::{binary_kl, entropy, expected_info_gain, kl_divergence, subset_gain_bound};
pub use model::{Family, ResponseDistribution, UserModel};
pub use posterior::{marginal_response_probs, Posterior, Query};

/// Tolerance for probability identities (normalization, Bayes equivalence).
pub const PROB_TOL: f64 = 1e-9;
