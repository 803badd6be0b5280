use std::time::Instant;

use noisy_search::harness::DatasetSpec;
use noisy_search::{select_query, Dataset, Family, Posterior, Query, StrategyKind, UserModel};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::ApiError;

/// Largest number of masses listed in a posterior summary.
pub const TOP_MASSES: usize = 256;
/// Number of histogram buckets in a posterior summary (fewer for small n).
pub const HISTOGRAM_BUCKETS: usize = 64;
/// Largest dataset a session may use.
pub const MAX_POINTS: usize = 100_000;
/// The ball strategy keeps an all-pairs neighbor table.
pub const MAX_BALL_POINTS: usize = 5_000;

fn default_k() -> usize {
    2
}

fn default_theta() -> f64 {
    1.0
}

fn default_family() -> Family {
    Family::Polynomial
}

fn default_strategy() -> StrategyKind {
    StrategyKind::BinaryQuantile
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateRequest {
    /// Falls back to the server's default dataset.
    #[serde(default)]
    pub dataset: Option<DatasetSpec>,
    #[serde(default = "default_strategy")]
    pub strategy: StrategyKind,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_family")]
    pub family: Family,
    /// Sharpness the searcher assumes for the responder.
    #[serde(default = "default_theta")]
    pub theta: f64,
    /// Seeds the random strategy.
    #[serde(default)]
    pub seed: u64,
    /// Rounds after which the session is marked exhausted.
    #[serde(default)]
    pub max_rounds: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnswerRequest {
    /// 1-based position of the chosen query point.
    #[serde(default)]
    pub response: Option<usize>,
    /// The target is among the shown points.
    #[serde(default)]
    pub found: Option<bool>,
    /// Round being answered; a stale round is rejected.
    #[serde(default)]
    pub round: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Active,
    Found,
    Exhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub round: usize,
    /// 1-based data-point indices.
    pub query: Vec<usize>,
    /// 1-based response position; absent when the round ended the search.
    pub response: Option<usize>,
    pub found: bool,
    /// Posterior entropy after the answer, in bits.
    pub entropy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassEntry {
    /// 1-based data-point index.
    pub index: usize,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub entropy: f64,
    /// Points carrying mass.
    pub support: usize,
    /// Heaviest points, heaviest first, at most [`TOP_MASSES`].
    pub top: Vec<MassEntry>,
    /// Mass per bucket of consecutive indices.
    pub histogram: Vec<f64>,
    /// Indices per bucket (the last bucket may be shorter).
    pub bucket_size: usize,
}

impl PosteriorSummary {
    pub fn of(posterior: &Posterior) -> Self {
        let mass = posterior.mass();
        let n = mass.len();
        let mut order: Vec<usize> = posterior.support().collect();
        let support = order.len();
        order.sort_by(|&a, &b| mass[b].total_cmp(&mass[a]).then(a.cmp(&b)));
        order.truncate(TOP_MASSES);
        let bucket_size = n.div_ceil(HISTOGRAM_BUCKETS.min(n)).max(1);
        PosteriorSummary {
            entropy: posterior.entropy(),
            support,
            top: order
                .iter()
                .map(|&i| MassEntry {
                    index: i + 1,
                    mass: mass[i],
                })
                .collect(),
            histogram: mass.chunks(bucket_size).map(|c| c.iter().sum()).collect(),
            bucket_size,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub id: String,
    pub status: Status,
    /// Round of the query currently shown (1-based).
    pub round: usize,
    pub strategy: StrategyKind,
    pub k: usize,
    pub family: Family,
    pub theta: f64,
    pub n: usize,
    pub dim: usize,
    /// 1-based indices of the query to answer; absent once the session ends.
    pub query: Option<Vec<usize>>,
    pub posterior: PosteriorSummary,
    pub history: Vec<HistoryEntry>,
    /// Point coordinates, one row per point; omitted from answer replies.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<Vec<f64>>>,
}

pub struct Session {
    id: String,
    data: Dataset,
    model: UserModel,
    strategy: StrategyKind,
    k: usize,
    posterior: Posterior,
    query: Option<Query>,
    round: usize,
    max_rounds: Option<usize>,
    status: Status,
    history: Vec<HistoryEntry>,
    rng: ChaCha8Rng,
    pub(crate) last_used: Instant,
}

impl Session {
    pub fn create(id: String, req: CreateRequest, default_dataset: Option<&DatasetSpec>) -> Result<Self, ApiError> {
        let spec = req
            .dataset
            .as_ref()
            .or(default_dataset)
            .ok_or_else(|| ApiError::BadRequest("no dataset given and the server has no default".into()))?;
        check_size(spec, req.strategy)?;
        let data = spec.build().map_err(|e| ApiError::BadRequest(e.to_string()))?;
        check_count(data.len(), req.strategy)?;
        let model = UserModel::new(req.family, req.theta).map_err(|e| ApiError::BadRequest(e.to_string()))?;
        req.strategy
            .check_applicable(&data, req.k)
            .map_err(|e| ApiError::BadRequest(e.to_string()))?;
        if req.max_rounds == Some(0) {
            return Err(ApiError::BadRequest("max_rounds must be at least 1".into()));
        }
        let mut session = Session {
            id,
            posterior: Posterior::uniform(data.len()),
            data,
            model,
            strategy: req.strategy,
            k: req.k,
            query: None,
            round: 0,
            max_rounds: req.max_rounds,
            status: Status::Active,
            history: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(req.seed),
            last_used: Instant::now(),
        };
        session.next_query();
        Ok(session)
    }

    pub fn status(&self) -> Status {
        self.status
    }

    pub fn round(&self) -> usize {
        self.round
    }

    fn next_query(&mut self) {
        if self.max_rounds.is_some_and(|m| self.round >= m) {
            self.exhaust();
            return;
        }
        match select_query(self.strategy, &self.data, &self.posterior, self.k, &mut self.rng) {
            Ok(sel) => {
                if let Some(why) = &sel.fallback {
                    log::info!("session {}: {why}; querying the heaviest points", self.id);
                }
                self.query = Some(sel.query);
                self.round += 1;
            }
            Err(e) => {
                log::warn!("session {}: {e}", self.id);
                self.exhaust();
            }
        }
    }

    fn exhaust(&mut self) {
        self.status = Status::Exhausted;
        self.query = None;
    }

    pub fn answer(&mut self, req: &AnswerRequest) -> Result<(), ApiError> {
        if self.status != Status::Active {
            return Err(ApiError::Conflict(
                format!("session is {:?}", self.status).to_lowercase(),
            ));
        }
        if let Some(round) = req.round {
            if round != self.round {
                return Err(ApiError::Conflict(format!(
                    "round {round} is not the current round {}",
                    self.round
                )));
            }
        }
        let query = self.query.clone().expect("active sessions hold a query");
        let shown: Vec<usize> = query.iter().map(|q| q + 1).collect();
        match (req.response, req.found) {
            (None, Some(true)) => {
                self.status = Status::Found;
                self.query = None;
                self.history.push(HistoryEntry {
                    round: self.round,
                    query: shown,
                    response: None,
                    found: true,
                    entropy: self.posterior.entropy(),
                });
                Ok(())
            }
            (Some(r), None | Some(false)) => {
                if r == 0 || r > query.len() {
                    return Err(ApiError::BadRequest(format!("response must be in 1..={}", query.len())));
                }
                match self.posterior.update(&self.data, &self.model, &query, r - 1) {
                    Ok(next) => self.posterior = next,
                    Err(e) => {
                        // Nothing left outside the query: the answer contradicts the model.
                        log::warn!("session {}: {e}", self.id);
                        self.history.push(HistoryEntry {
                            round: self.round,
                            query: shown,
                            response: Some(r),
                            found: false,
                            entropy: self.posterior.entropy(),
                        });
                        self.exhaust();
                        return Ok(());
                    }
                }
                self.history.push(HistoryEntry {
                    round: self.round,
                    query: shown,
                    response: Some(r),
                    found: false,
                    entropy: self.posterior.entropy(),
                });
                self.next_query();
                Ok(())
            }
            _ => Err(ApiError::BadRequest(
                "send exactly one of {\"response\": r} or {\"found\": true}".into(),
            )),
        }
    }

    pub fn summary(&self, with_points: bool) -> SessionSummary {
        SessionSummary {
            id: self.id.clone(),
            status: self.status,
            round: self.round,
            strategy: self.strategy,
            k: self.k,
            family: self.model.family(),
            theta: self.model.theta(),
            n: self.data.len(),
            dim: self.data.dim(),
            query: self.query.as_ref().map(|q| q.iter().map(|i| i + 1).collect()),
            posterior: PosteriorSummary::of(&self.posterior),
            history: self.history.clone(),
            points: with_points.then(|| (0..self.data.len()).map(|i| self.data.point(i).to_vec()).collect()),
        }
    }
}

/// Rejects oversized datasets before building them.
fn check_size(spec: &DatasetSpec, strategy: StrategyKind) -> Result<(), ApiError> {
    let n = match spec {
        DatasetSpec::UniformGrid { n, .. } | DatasetSpec::Adversarial { n, .. } | DatasetSpec::RandomCube { n, .. } => {
            *n
        }
        DatasetSpec::Explicit { .. } => return Ok(()),
    };
    check_count(n, strategy)
}

fn check_count(n: usize, strategy: StrategyKind) -> Result<(), ApiError> {
    let limit = if strategy == StrategyKind::DBall {
        MAX_BALL_POINTS
    } else {
        MAX_POINTS
    };
    if n > limit {
        return Err(ApiError::BadRequest(format!(
            "{strategy} sessions allow at most {limit} points"
        )));
    }
    Ok(())
}
