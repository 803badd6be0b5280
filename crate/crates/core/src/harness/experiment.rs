use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::episode::{default_max_queries, run_episode, EpisodeConfig, EpisodeResult};
use crate::adversarial::gen_adversarial_points;
use crate::analysis::{adversarial_lower_bound, kary_trend, quantile_search_bound, BoundReport};
use crate::error::{Error, Result};
use crate::feedback::{Dataset, Family, Norm, UserModel};
use crate::strategies::StrategyKind;

pub const SPEC_VERSION: u32 = 1;

fn one() -> f64 {
    1.0
}

fn euclidean() -> Norm {
    Norm::euclidean()
}

/// Explicit coordinates: a flat list for the line, or one row per point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ExplicitPoints {
    Line(Vec<f64>),
    Space(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetSpec {
    UniformGrid {
        n: usize,
        #[serde(default = "one")]
        spacing: f64,
    },
    Adversarial {
        n: usize,
        theta: f64,
        #[serde(default)]
        x1: f64,
        #[serde(default = "one")]
        x2: f64,
    },
    Explicit {
        points: ExplicitPoints,
        #[serde(default = "euclidean")]
        norm: Norm,
    },
    RandomCube {
        n: usize,
        dim: usize,
        #[serde(default = "euclidean")]
        norm: Norm,
        #[serde(default)]
        seed: u64,
    },
}

impl DatasetSpec {
    pub fn build(&self) -> Result<Dataset> {
        match self {
            DatasetSpec::UniformGrid { n, spacing } => Dataset::uniform_grid(*n, *spacing),
            DatasetSpec::Adversarial { n, theta, x1, x2 } => gen_adversarial_points(*n, *theta, *x1, *x2)?.dataset(),
            DatasetSpec::Explicit { points, norm } => match points {
                ExplicitPoints::Line(x) => Dataset::line(x.clone()),
                ExplicitPoints::Space(rows) => {
                    let dim = rows.first().map_or(0, Vec::len);
                    if rows.iter().any(|r| r.len() != dim) {
                        return Err(Error::InvalidDataset("rows have different lengths".into()));
                    }
                    Dataset::space(dim, rows.concat(), *norm)
                }
            },
            DatasetSpec::RandomCube { n, dim, norm, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                Dataset::random_cube(*n, *dim, *norm, &mut rng)
            }
        }
    }

    pub fn is_adversarial(&self) -> bool {
        matches!(self, DatasetSpec::Adversarial { .. })
    }
}

/// Axes of the experiment grid. Cells are the cartesian product, enumerated
/// in field order with the last field varying fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub datasets: Vec<DatasetSpec>,
    pub strategies: Vec<StrategyKind>,
    pub k: Vec<usize>,
    pub family: Vec<Family>,
    pub theta_true: Vec<f64>,
    /// Parameter the searcher assumes; equal to the true one when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_assumed: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub spec_version: u32,
    pub master_seed: u64,
    pub episodes: usize,
    pub grid: Grid,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_queries: Option<usize>,
    /// Keep every episode record (with transcripts) in the result.
    #[serde(default)]
    pub keep_episodes: bool,
    #[serde(default)]
    pub track_expected_gain: bool,
    #[serde(default)]
    pub verify_rounds: bool,
}

impl ExperimentSpec {
    pub fn new(master_seed: u64, episodes: usize, grid: Grid) -> Self {
        ExperimentSpec {
            spec_version: SPEC_VERSION,
            master_seed,
            episodes,
            grid,
            max_queries: None,
            keep_episodes: false,
            track_expected_gain: false,
            verify_rounds: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.spec_version != SPEC_VERSION {
            return Err(Error::SchemaVersion {
                found: self.spec_version,
                expected: SPEC_VERSION,
            });
        }
        if self.episodes == 0 {
            return Err(Error::InvalidArgument("episodes must be at least 1".into()));
        }
        if self.max_queries == Some(0) {
            return Err(Error::InvalidArgument("max_queries must be at least 1".into()));
        }
        let thetas = self
            .grid
            .theta_true
            .iter()
            .chain(self.grid.theta_assumed.iter().flatten());
        for &t in thetas {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::InvalidArgument(format!("theta must be positive, got {t}")));
            }
        }
        Ok(())
    }

    fn cells(&self) -> Vec<CellKey> {
        let g = &self.grid;
        let mut out = Vec::new();
        for (dataset, _) in g.datasets.iter().enumerate() {
            for &strategy in &g.strategies {
                for &k in &g.k {
                    for &family in &g.family {
                        for &theta_true in &g.theta_true {
                            let assumed = g.theta_assumed.clone().unwrap_or_else(|| vec![theta_true]);
                            for theta_assumed in assumed {
                                out.push(CellKey {
                                    dataset,
                                    strategy,
                                    k,
                                    family,
                                    theta_true,
                                    theta_assumed,
                                });
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy)]
struct CellKey {
    dataset: usize,
    strategy: StrategyKind,
    k: usize,
    family: Family,
    theta_true: f64,
    theta_assumed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryStats {
    pub mean: f64,
    pub median: f64,
    pub p95: f64,
    /// Standard error of the mean.
    pub stderr: f64,
    pub min: usize,
    pub max: usize,
}

impl QueryStats {
    /// `None` for an empty sample. The 95th percentile is the nearest-rank
    /// value.
    pub fn from_counts(counts: &[usize]) -> Option<Self> {
        if counts.is_empty() {
            return None;
        }
        let mut sorted = counts.to_vec();
        sorted.sort_unstable();
        let m = sorted.len();
        let mean = sorted.iter().sum::<usize>() as f64 / m as f64;
        let median = if m % 2 == 1 {
            sorted[m / 2] as f64
        } else {
            (sorted[m / 2 - 1] + sorted[m / 2]) as f64 / 2.0
        };
        let rank = ((0.95 * m as f64).ceil() as usize).clamp(1, m);
        let var = if m > 1 {
            sorted.iter().map(|&c| (c as f64 - mean).powi(2)).sum::<f64>() / (m - 1) as f64
        } else {
            0.0
        };
        Some(QueryStats {
            mean,
            median,
            p95: sorted[rank - 1] as f64,
            stderr: (var / m as f64).sqrt(),
            min: sorted[0],
            max: sorted[m - 1],
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub dataset: DatasetSpec,
    pub strategy: StrategyKind,
    pub k: usize,
    pub family: Family,
    pub theta_true: f64,
    pub theta_assumed: f64,
    pub n: usize,
    pub dim: usize,
    pub episodes: usize,
    /// Query counts; episodes that hit the cap count at the cap.
    pub queries: Option<QueryStats>,
    pub not_found: usize,
    pub failed: usize,
    /// Mean realized entropy drop per round, in bits.
    pub mean_gain: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub bounds: Vec<BoundReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub episode_results: Option<Vec<EpisodeResult>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub spec_version: u32,
    pub spec: ExperimentSpec,
    pub cells: Vec<CellResult>,
}

/// Per-episode seed: splitmix64 over the master seed, cell and episode.
pub fn episode_seed(master: u64, cell: usize, episode: usize) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    mix(mix(mix(master) ^ cell as u64) ^ episode as u64)
}

fn bounds_for(spec: &DatasetSpec, key: &CellKey, n: usize) -> Vec<BoundReport> {
    let mut out = Vec::new();
    if key.strategy == StrategyKind::BinaryQuantile && key.family == Family::Polynomial {
        out.push(quantile_search_bound(n, key.theta_true));
    }
    if key.strategy == StrategyKind::KaryIntervals {
        out.push(kary_trend(n, key.k));
    }
    if spec.is_adversarial() {
        if let Ok(b) = adversarial_lower_bound(n, key.k) {
            out.push(b);
        }
    }
    out
}

fn run_cell(
    spec: &ExperimentSpec,
    index: usize,
    key: CellKey,
    data: &std::result::Result<Dataset, String>,
) -> CellResult {
    let ds_spec = spec.grid.datasets[key.dataset].clone();
    let mut cell = CellResult {
        dataset: ds_spec.clone(),
        strategy: key.strategy,
        k: key.k,
        family: key.family,
        theta_true: key.theta_true,
        theta_assumed: key.theta_assumed,
        n: 0,
        dim: 0,
        episodes: spec.episodes,
        queries: None,
        not_found: 0,
        failed: 0,
        mean_gain: None,
        error: None,
        bounds: Vec::new(),
        episode_results: None,
    };
    let data = match data {
        Ok(d) => d,
        Err(e) => {
            cell.error = Some(e.clone());
            return cell;
        }
    };
    cell.n = data.len();
    cell.dim = data.dim();
    cell.bounds = bounds_for(&ds_spec, &key, data.len());
    let models = UserModel::new(key.family, key.theta_true)
        .and_then(|u| Ok((u, UserModel::new(key.family, key.theta_assumed)?)));
    let (user, assumed) = match models {
        Ok(m) => m,
        Err(e) => {
            cell.error = Some(e.to_string());
            return cell;
        }
    };
    if let Err(e) = key.strategy.check_applicable(data, key.k) {
        cell.error = Some(e.to_string());
        return cell;
    }
    let max_queries = spec.max_queries.unwrap_or_else(|| default_max_queries(data.len()));
    let results: Vec<EpisodeResult> = (0..spec.episodes)
        .into_par_iter()
        .map(|e| {
            let mut cfg = EpisodeConfig::new(user, key.strategy, key.k, episode_seed(spec.master_seed, index, e));
            cfg.assumed = assumed;
            cfg.max_queries = Some(max_queries);
            cfg.record_transcript = spec.keep_episodes;
            cfg.track_expected_gain = spec.track_expected_gain;
            cfg.verify_rounds = spec.verify_rounds;
            run_episode(data, &cfg)
        })
        .collect();

    let counts: Vec<usize> = results.iter().map(|r| r.queries).collect();
    cell.queries = QueryStats::from_counts(&counts);
    cell.not_found = results.iter().filter(|r| !r.found && r.failure.is_none()).count();
    cell.failed = results.iter().filter(|r| r.failure.is_some()).count();
    let rounds: usize = results.iter().map(|r| r.gains.len()).sum();
    if rounds > 0 {
        let total: f64 = results.iter().flat_map(|r| r.gains.iter()).sum();
        cell.mean_gain = Some(total / rounds as f64);
    }
    if spec.keep_episodes {
        cell.episode_results = Some(results);
    }
    cell
}

/// Runs every cell of the grid. Cells that cannot run (bad dataset,
/// inapplicable strategy) carry an error and no statistics; the other cells
/// are unaffected.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    spec.validate()?;
    let datasets: Vec<std::result::Result<Dataset, String>> = spec
        .grid
        .datasets
        .iter()
        .map(|d| d.build().map_err(|e| e.to_string()))
        .collect();
    let cells = spec
        .cells()
        .into_iter()
        .enumerate()
        .map(|(i, key)| run_cell(spec, i, key, &datasets[key.dataset]))
        .collect();
    Ok(ExperimentResult {
        spec_version: SPEC_VERSION,
        spec: spec.clone(),
        cells,
    })
}

/// Runs `base` once per assumed parameter in `theta_grid` (plus the true
/// parameter if the grid lacks it). `base` must have a single true
/// parameter.
pub fn mismatch_sweep(base: &ExperimentSpec, theta_grid: &[f64]) -> Result<ExperimentResult> {
    let truth = match base.grid.theta_true.as_slice() {
        [t] => *t,
        other => {
            return Err(Error::InvalidArgument(format!(
                "a sweep needs exactly one true theta, got {}",
                other.len()
            )))
        }
    };
    let mut grid: Vec<f64> = theta_grid.to_vec();
    if !grid.contains(&truth) {
        grid.push(truth);
    }
    grid.sort_by(f64::total_cmp);
    let mut spec = base.clone();
    spec.grid.theta_assumed = Some(grid);
    run_experiment(&spec)
}
