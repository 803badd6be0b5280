use super::{CheckFailure, StrategyError};
use crate::feedback::{Dataset, Posterior, Query};

/// The quartile construction behind a binary-quantile query.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileSelection {
    pub query: Query,
    /// `i_0 = 0, I(1/4), I(1/2), I(3/4), i_4 = n - 1`.
    pub quantiles: [usize; 5],
    /// Lengths of the four intervals `[x_{i_{s-1}}, x_{i_s}]`.
    pub lengths: [f64; 4],
    /// Shortest interval (0-based), lowest index on ties.
    pub shortest: usize,
    /// Interval whose endpoints were queried.
    pub queried: usize,
    /// All four intervals have positive length.
    pub nondegenerate: bool,
    /// The queried interval collapsed to one heavy point, which was paired
    /// with its nearest live neighbor.
    pub collapsed: bool,
}

/// Splits the posterior at its quartiles, finds the shortest of the four
/// intervals and queries the endpoints of its neighbor that touches neither
/// `x_1` nor `x_n`.
pub fn select_binary_quantile(data: &Dataset, posterior: &Posterior) -> Result<QuantileSelection, StrategyError> {
    debug_assert!(data.is_line());
    let positive = posterior.support_size();
    if positive < 2 {
        return Err(StrategyError::InsufficientCandidates { positive });
    }
    let n = data.len();
    let x = data.positions().expect("one-dimensional data");
    let level = |p: f64| posterior.quantile_index(p).expect("valid level");
    let quantiles = [0, level(0.25), level(0.5), level(0.75), n - 1];
    let lengths: [f64; 4] = std::array::from_fn(|s| x[quantiles[s + 1]] - x[quantiles[s]]);
    let shortest = (1..4).fold(0, |best, s| if lengths[s] < lengths[best] { s } else { best });
    // The outer intervals contain x_1 / x_n, so only the inner neighbors qualify.
    let queried = match shortest {
        0 | 2 => 1,
        _ => 2,
    };
    let (lo, hi) = (quantiles[queried], quantiles[queried + 1]);
    let collapsed = lo == hi;
    let pair = if collapsed {
        let mass = posterior.mass();
        let left = (0..lo).rev().find(|&i| mass[i] > 0.0);
        let right = (lo + 1..n).find(|&i| mass[i] > 0.0);
        let partner = match (left, right) {
            (Some(l), Some(r)) => {
                if x[lo] - x[l] <= x[r] - x[lo] {
                    l
                } else {
                    r
                }
            }
            (Some(l), None) => l,
            (None, Some(r)) => r,
            (None, None) => unreachable!("two positive-mass points exist"),
        };
        if partner < lo {
            vec![partner, lo]
        } else {
            vec![lo, partner]
        }
    } else {
        vec![lo, hi]
    };
    Ok(QuantileSelection {
        query: Query::new(pair, n).expect("distinct indices"),
        quantiles,
        lengths,
        shortest,
        queried,
        nondegenerate: lengths.iter().all(|&l| l > 0.0),
        collapsed,
    })
}

/// Verifies that every point of the shortest interval is at least twice as
/// far from the far query point as from the shared one. Returns the largest
/// observed ratio `|x - q_near| / |x - q_far|`, which must stay `<= 1/2`.
/// Degenerate selections are not covered by the guarantee and pass
/// trivially.
pub fn check_quantile_separation(data: &Dataset, sel: &QuantileSelection) -> Result<f64, CheckFailure> {
    if !sel.nondegenerate || sel.collapsed {
        return Ok(0.0);
    }
    let x = data.positions().expect("one-dimensional data");
    let (lo, hi) = (sel.quantiles[sel.queried], sel.quantiles[sel.queried + 1]);
    let (near, far) = if sel.queried == sel.shortest + 1 {
        (lo, hi)
    } else {
        (hi, lo)
    };
    let span = sel.quantiles[sel.shortest]..=sel.quantiles[sel.shortest + 1];
    let mut worst: f64 = 0.0;
    for i in span {
        let to_near = (x[i] - x[near]).abs();
        let to_far = (x[i] - x[far]).abs();
        let ratio = to_near / to_far;
        if ratio > 0.5 * (1.0 + 1e-12) {
            return Err(CheckFailure::new(i, format!("distance ratio {ratio} exceeds 1/2")));
        }
        worst = worst.max(ratio);
    }
    Ok(worst)
}
