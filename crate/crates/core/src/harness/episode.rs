use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::response_floor;
use crate::feedback::{expected_info_gain, Dataset, Family, Posterior, UserModel};
use crate::strategies::{
    check_ball_separation, check_beta_floor, check_interval_set, check_quantile_separation, select_query, Selection,
    SelectionDetail, StrategyKind,
};

/// Independent random streams of one episode.
const TARGET_STREAM: u64 = 0;
const USER_STREAM: u64 = 1;
const STRATEGY_STREAM: u64 = 2;

pub fn default_max_queries(n: usize) -> usize {
    let bits = (n.max(2) as f64).log2().ceil() as usize;
    50 * bits
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// One search episode: the simulated user answers with `user`, the searcher
/// updates its posterior with `assumed`.
#[derive(Debug, Clone)]
pub struct EpisodeConfig {
    pub user: UserModel,
    pub assumed: UserModel,
    pub strategy: StrategyKind,
    pub k: usize,
    /// Defaults to [`default_max_queries`].
    pub max_queries: Option<usize>,
    pub seed: u64,
    /// 0-based target; drawn uniformly when absent.
    pub target: Option<usize>,
    /// Starting posterior; uniform when absent.
    pub prior: Option<Posterior>,
    pub record_transcript: bool,
    /// Record the analytic expected gain of every issued query.
    pub track_expected_gain: bool,
    /// Check the strategy's geometric guarantees on every round.
    pub verify_rounds: bool,
}

impl EpisodeConfig {
    pub fn new(model: UserModel, strategy: StrategyKind, k: usize, seed: u64) -> Self {
        EpisodeConfig {
            user: model,
            assumed: model,
            strategy,
            k,
            max_queries: None,
            seed,
            target: None,
            prior: None,
            record_transcript: false,
            track_expected_gain: false,
            verify_rounds: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Round {
    /// 1-based query indices.
    pub query: Vec<usize>,
    /// 1-based response; absent on the round that found the target.
    pub response: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fallback: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundGain {
    /// Expected entropy drop of the query, in bits, under the assumed model.
    pub expected: f64,
    /// False when the strategy's construction degenerated this round
    /// (zero-length quartile interval or fallback query).
    pub nondegenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundCheckFailure {
    /// 1-based round.
    pub round: usize,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    /// 1-based target index.
    pub target: usize,
    pub queries: usize,
    /// The target appeared in a query.
    pub found: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
    /// Realized entropy drop of every round that did not find the target.
    pub gains: Vec<f64>,
    pub initial_entropy: f64,
    pub final_entropy: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub expected_gains: Vec<RoundGain>,
    /// Rounds on which a geometric check ran.
    #[serde(default)]
    pub rounds_checked: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub check_failures: Vec<RoundCheckFailure>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transcript: Option<Vec<Round>>,
}

/// Runs the strategy's own guarantee checks against this round's selection.
/// Returns `None` when the selection carries no checkable guarantee.
fn verify_selection(
    data: &Dataset,
    posterior: &Posterior,
    user: &UserModel,
    sel: &Selection,
) -> Option<Result<(), String>> {
    if sel.fallback.is_some() {
        return None;
    }
    match &sel.detail {
        SelectionDetail::Quantile(q) => Some(
            check_quantile_separation(data, q)
                .map(|_| ())
                .map_err(|e| e.to_string()),
        ),
        SelectionDetail::Ball(b) if !b.fallback => {
            Some(check_ball_separation(data, posterior, b).map_err(|e| e.to_string()))
        }
        SelectionDetail::Intervals(iv) => {
            let k = iv.query.len();
            let set = check_interval_set(data, posterior, &iv.set, k).map_err(|e| format!("interval set: {e}"));
            Some(set.and_then(|()| {
                if user.family() != Family::Exponential {
                    return Ok(());
                }
                let beta = response_floor(user.theta(), data.min_gap());
                check_beta_floor(data, user, iv, beta)
                    .map(|_| ())
                    .map_err(|e| format!("beta floor: {e}"))
            }))
        }
        _ => None,
    }
}

pub fn run_episode(data: &Dataset, config: &EpisodeConfig) -> EpisodeResult {
    let n = data.len();
    let max_queries = config.max_queries.unwrap_or_else(|| default_max_queries(n)).max(1);
    let mut target_rng = stream(config.seed, TARGET_STREAM);
    let mut user_rng = stream(config.seed, USER_STREAM);
    let mut strategy_rng = stream(config.seed, STRATEGY_STREAM);

    let target = config.target.unwrap_or_else(|| target_rng.random_range(0..n));
    let mut posterior = config.prior.clone().unwrap_or_else(|| Posterior::uniform(n));
    let initial_entropy = posterior.entropy();
    let mut result = EpisodeResult {
        target: target + 1,
        queries: 0,
        found: false,
        failure: None,
        gains: Vec::new(),
        initial_entropy,
        final_entropy: initial_entropy,
        expected_gains: Vec::new(),
        rounds_checked: 0,
        check_failures: Vec::new(),
        transcript: config.record_transcript.then(Vec::new),
    };

    while result.queries < max_queries {
        let sel = match select_query(config.strategy, data, &posterior, config.k, &mut strategy_rng) {
            Ok(sel) => sel,
            Err(e) => {
                result.failure = Some(e.to_string());
                break;
            }
        };
        result.queries += 1;
        let round = result.queries;

        if config.verify_rounds {
            if let Some(outcome) = verify_selection(data, &posterior, &config.user, &sel) {
                result.rounds_checked += 1;
                if let Err(detail) = outcome {
                    result.check_failures.push(RoundCheckFailure { round, detail });
                }
            }
        }
        if config.track_expected_gain {
            let nondegenerate = sel.fallback.is_none()
                && match &sel.detail {
                    SelectionDetail::Quantile(q) => q.nondegenerate && !q.collapsed,
                    SelectionDetail::Ball(b) => !b.fallback,
                    _ => true,
                };
            result.expected_gains.push(RoundGain {
                expected: expected_info_gain(&posterior, data, &config.assumed, &sel.query),
                nondegenerate,
            });
        }
        let fallback = sel.fallback.as_ref().map(|e| e.to_string());
        let query_1based = || sel.query.iter().map(|q| q + 1).collect::<Vec<_>>();

        if sel.query.contains(target) {
            result.found = true;
            if let Some(t) = result.transcript.as_mut() {
                t.push(Round {
                    query: query_1based(),
                    response: None,
                    fallback,
                });
            }
            break;
        }

        let response = match config.user.response_probs(data, &sel.query, target) {
            Ok(dist) => dist.sample(&mut user_rng),
            Err(e) => {
                result.failure = Some(e.to_string());
                break;
            }
        };
        if let Some(t) = result.transcript.as_mut() {
            t.push(Round {
                query: query_1based(),
                response: Some(response + 1),
                fallback,
            });
        }
        match posterior.update(data, &config.assumed, &sel.query, response) {
            Ok(next) => {
                let before = posterior.entropy();
                posterior = next;
                result.gains.push(before - posterior.entropy());
            }
            Err(e) => {
                result.failure = Some(e.to_string());
                break;
            }
        }
    }
    result.final_entropy = posterior.entropy();
    result
}
