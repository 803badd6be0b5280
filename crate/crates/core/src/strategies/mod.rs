//! Query-selection policies.
//!
//! Each strategy maps the dataset and the current posterior to the next
//! query. [`select_query`] is the entry point used by the harness and the
//! session service: it checks applicability and routes construction failures
//! to the top-k fallback.

mod ball;
mod baseline;
mod intervals;
mod quantile;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::feedback::{Dataset, Posterior, Query};

pub use ball::{ball_mass_threshold, check_ball_separation, select_dball, BallSelection};
pub use baseline::{select_median_bisection, select_random_baseline, select_topk_fallback};
pub use intervals::{
    build_interval_set, check_beta_floor, check_interval_set, interval_mass_threshold, select_kary_intervals, Interval,
    IntervalSelection, IntervalSet,
};
pub use quantile::{check_quantile_separation, select_binary_quantile, QuantileSelection};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    /// Quartile intervals; query the interval next to the shortest one.
    BinaryQuantile,
    /// Smallest heavy ball and the nearest point well outside it.
    #[serde(rename = "d_ball")]
    DBall,
    /// `k` separated heavy intervals, one endpoint each.
    KaryIntervals,
    /// The `k` heaviest points.
    #[serde(rename = "top_k_fallback")]
    TopKFallback,
    RandomBaseline,
    /// The two points straddling the posterior median.
    MedianBisection,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 6] = [
        StrategyKind::BinaryQuantile,
        StrategyKind::DBall,
        StrategyKind::KaryIntervals,
        StrategyKind::TopKFallback,
        StrategyKind::RandomBaseline,
        StrategyKind::MedianBisection,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::BinaryQuantile => "binary_quantile",
            StrategyKind::DBall => "d_ball",
            StrategyKind::KaryIntervals => "kary_intervals",
            StrategyKind::TopKFallback => "top_k_fallback",
            StrategyKind::RandomBaseline => "random_baseline",
            StrategyKind::MedianBisection => "median_bisection",
        }
    }

    /// Rejects `(strategy, dataset, k)` combinations the strategy is not
    /// defined for.
    pub fn check_applicable(self, data: &Dataset, k: usize) -> Result<(), StrategyError> {
        let fail = |why: &str| Err(StrategyError::NotApplicable(format!("{}: {why}", self.name())));
        if k < 2 {
            return fail("k must be at least 2");
        }
        if k > data.len() {
            return fail("k exceeds the number of data points");
        }
        match self {
            StrategyKind::BinaryQuantile | StrategyKind::MedianBisection if k != 2 => fail("requires k = 2"),
            StrategyKind::BinaryQuantile | StrategyKind::MedianBisection | StrategyKind::KaryIntervals
                if !data.is_line() =>
            {
                fail("requires one-dimensional data")
            }
            StrategyKind::DBall if k != 2 => fail("requires k = 2"),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StrategyKind {
    type Err = StrategyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.to_ascii_lowercase().replace('-', "_");
        Ok(match key.as_str() {
            "binary_quantile" | "quantile" => StrategyKind::BinaryQuantile,
            "d_ball" | "dball" | "ball" => StrategyKind::DBall,
            "kary_intervals" | "kary" | "intervals" => StrategyKind::KaryIntervals,
            "top_k_fallback" | "topk" | "top_k" => StrategyKind::TopKFallback,
            "random_baseline" | "random" => StrategyKind::RandomBaseline,
            "median_bisection" | "median" => StrategyKind::MedianBisection,
            _ => return Err(StrategyError::NotApplicable(format!("unknown strategy {s:?}"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StrategyError {
    #[error("strategy not applicable: {0}")]
    NotApplicable(String),
    #[error("only {positive} point(s) carry posterior mass")]
    InsufficientCandidates { positive: usize },
    #[error("interval construction failed")]
    ConstructionFailed,
}

/// A point where a strategy's geometric guarantee does not hold.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckFailure {
    /// 0-based data-point index of the offending point.
    pub index: usize,
    pub detail: String,
}

impl CheckFailure {
    pub(crate) fn new(index: usize, detail: String) -> Self {
        CheckFailure { index, detail }
    }
}

impl fmt::Display for CheckFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "point {}: {}", self.index + 1, self.detail)
    }
}

/// What a strategy computed on the way to its query.
#[derive(Debug, Clone, PartialEq)]
pub enum SelectionDetail {
    Quantile(QuantileSelection),
    Ball(BallSelection),
    Intervals(IntervalSelection),
    TopK,
    Random,
    Median,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub query: Query,
    pub detail: SelectionDetail,
    /// Set when the requested strategy could not build a query and the top-k
    /// fallback was used instead.
    pub fallback: Option<StrategyError>,
}

impl Selection {
    fn plain(query: Query, detail: SelectionDetail) -> Self {
        Selection {
            query,
            detail,
            fallback: None,
        }
    }
}

/// Selects the next query with `kind`, falling back to the `k` heaviest
/// points when the strategy's construction fails or too few candidates
/// remain.
pub fn select_query<R: Rng + ?Sized>(
    kind: StrategyKind,
    data: &Dataset,
    posterior: &Posterior,
    k: usize,
    rng: &mut R,
) -> Result<Selection, StrategyError> {
    kind.check_applicable(data, k)?;
    let primary = match kind {
        StrategyKind::BinaryQuantile => select_binary_quantile(data, posterior)
            .map(|s| Selection::plain(s.query.clone(), SelectionDetail::Quantile(s))),
        StrategyKind::MedianBisection => Ok(Selection::plain(
            select_median_bisection(data, posterior),
            SelectionDetail::Median,
        )),
        StrategyKind::DBall => {
            select_dball(data, posterior).map(|s| Selection::plain(s.query.clone(), SelectionDetail::Ball(s)))
        }
        StrategyKind::KaryIntervals => select_kary_intervals(data, posterior, k)
            .map(|s| Selection::plain(s.query.clone(), SelectionDetail::Intervals(s))),
        StrategyKind::TopKFallback => Ok(Selection::plain(
            select_topk_fallback(posterior, k),
            SelectionDetail::TopK,
        )),
        StrategyKind::RandomBaseline => Ok(Selection::plain(
            select_random_baseline(posterior, k, rng),
            SelectionDetail::Random,
        )),
    };
    match primary {
        Err(e @ (StrategyError::ConstructionFailed | StrategyError::InsufficientCandidates { .. })) => Ok(Selection {
            query: select_topk_fallback(posterior, k),
            detail: SelectionDetail::TopK,
            fallback: Some(e),
        }),
        other => other,
    }
}
