use super::{CheckFailure, StrategyError};
use crate::feedback::{Dataset, Posterior, Query, UserModel};

/// Minimum mass per interval: `1 / (14 k - 12)`.
pub fn interval_mass_threshold(k: usize) -> f64 {
    1.0 / (14.0 * k as f64 - 12.0)
}

/// Closed index range `[start, end]` of data points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub start: usize,
    pub end: usize,
    pub mass: f64,
}

impl Interval {
    pub fn length(&self, x: &[f64]) -> f64 {
        x[self.end] - x[self.start]
    }

    pub fn contains(&self, i: usize) -> bool {
        (self.start..=self.end).contains(&i)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntervalSet {
    pub intervals: Vec<Interval>,
    pub min_mass: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntervalSelection {
    pub query: Query,
    pub set: IntervalSet,
}

fn slice_mass(mass: &[f64], start: usize, end: usize) -> f64 {
    mass[start..=end].iter().sum()
}

/// Greedy left-to-right construction of `k` separated intervals.
///
/// Each interval grows rightward until its mass reaches the threshold, is
/// shrunk from the left while it keeps that mass, and the next one starts at
/// least one interval length further right. Returns `None` when fewer than
/// `k` intervals fit.
pub fn build_interval_set(data: &Dataset, posterior: &Posterior, k: usize) -> Option<IntervalSet> {
    let x = data.positions().expect("one-dimensional data");
    let mass = posterior.mass();
    let n = x.len();
    let c = interval_mass_threshold(k);
    let mut intervals = Vec::with_capacity(k);
    let mut start = 0;
    while intervals.len() < k {
        while start < n && mass[start] <= 0.0 {
            start += 1;
        }
        if start >= n {
            return None;
        }
        let floor = start;
        let mut end = start;
        let mut acc = mass[start];
        while acc < c {
            end += 1;
            if end >= n {
                return None;
            }
            acc += mass[end];
        }
        while start < end && acc - mass[start] >= c {
            acc -= mass[start];
            start += 1;
        }
        // The running sum can drift an ulp from the exact slice sum.
        let mut exact = slice_mass(mass, start, end);
        while exact < c {
            if start > floor {
                start -= 1;
            } else if end + 1 < n {
                end += 1;
            } else {
                return None;
            }
            exact = slice_mass(mass, start, end);
        }
        let interval = Interval {
            start,
            end,
            mass: exact,
        };
        let len = interval.length(x);
        intervals.push(interval);
        let reach = x[end] + len;
        start = end + 1 + x[end + 1..].partition_point(|&p| p < reach);
    }
    Some(IntervalSet { intervals, min_mass: c })
}

/// Picks the left endpoint when the left half of the interval holds at
/// least as much mass as the right half (ties go left), else the right.
fn endpoint(x: &[f64], mass: &[f64], iv: &Interval) -> usize {
    let mid = 0.5 * (x[iv.start] + x[iv.end]);
    let (mut left, mut right) = (0.0, 0.0);
    for i in iv.start..=iv.end {
        if x[i] <= mid {
            left += mass[i];
        }
        if x[i] >= mid {
            right += mass[i];
        }
    }
    if left >= right - 1e-12 {
        iv.start
    } else {
        iv.end
    }
}

/// One query point per interval of [`build_interval_set`].
pub fn select_kary_intervals(
    data: &Dataset,
    posterior: &Posterior,
    k: usize,
) -> Result<IntervalSelection, StrategyError> {
    let set = build_interval_set(data, posterior, k).ok_or(StrategyError::ConstructionFailed)?;
    debug_assert!(check_interval_set(data, posterior, &set, k).is_ok());
    let x = data.positions().expect("one-dimensional data");
    let points = set
        .intervals
        .iter()
        .map(|iv| endpoint(x, posterior.mass(), iv))
        .collect();
    Ok(IntervalSelection {
        query: Query::new(points, data.len()).expect("intervals are disjoint"),
        set,
    })
}

/// Checks count, ordering, disjointness, the per-interval mass floor and
/// the separation rule (gap at least the shorter of the two lengths) for
/// every pair of intervals.
pub fn check_interval_set(
    data: &Dataset,
    posterior: &Posterior,
    set: &IntervalSet,
    k: usize,
) -> Result<(), CheckFailure> {
    let x = data.positions().expect("one-dimensional data");
    let ivs = &set.intervals;
    if ivs.len() != k {
        return Err(CheckFailure::new(0, format!("{} intervals, expected {k}", ivs.len())));
    }
    let c = interval_mass_threshold(k);
    for (j, iv) in ivs.iter().enumerate() {
        if iv.start > iv.end || iv.end >= x.len() {
            return Err(CheckFailure::new(iv.start, format!("interval {} malformed", j + 1)));
        }
        let m = slice_mass(posterior.mass(), iv.start, iv.end);
        if m < c {
            return Err(CheckFailure::new(
                iv.start,
                format!("interval {} has mass {m} < {c}", j + 1),
            ));
        }
        for (jj, other) in ivs.iter().enumerate().skip(j + 1) {
            if other.start <= iv.end {
                return Err(CheckFailure::new(
                    other.start,
                    format!("intervals {} and {} overlap", j + 1, jj + 1),
                ));
            }
            let gap = x[other.start] - x[iv.end];
            let need = iv.length(x).min(other.length(x));
            if gap < need {
                return Err(CheckFailure::new(
                    other.start,
                    format!("gap {gap} between intervals {} and {} is below {need}", j + 1, jj + 1),
                ));
            }
        }
    }
    Ok(())
}

/// For every non-queried point of an interval that is strictly closer to
/// its interval's query point than to any other, checks that the user picks
/// that query point with probability at least `beta`. Returns the smallest
/// such probability (1 when no point qualifies).
pub fn check_beta_floor(
    data: &Dataset,
    model: &UserModel,
    sel: &IntervalSelection,
    beta: f64,
) -> Result<f64, CheckFailure> {
    let k = sel.query.len();
    let mut dist = vec![0.0; k];
    let mut probs = vec![0.0; k];
    let mut lowest: f64 = 1.0;
    for (r, iv) in sel.set.intervals.iter().enumerate() {
        for i in iv.start..=iv.end {
            if sel.query.contains(i) {
                continue;
            }
            for (d, q) in dist.iter_mut().zip(sel.query.iter()) {
                *d = data.distance(i, q);
            }
            let own = dist[r];
            if dist.iter().enumerate().any(|(j, &d)| j != r && d <= own) {
                continue;
            }
            model.fill_probs(&dist, &mut probs);
            if probs[r] < beta * (1.0 - 1e-12) {
                return Err(CheckFailure::new(i, format!("p = {} below beta = {beta}", probs[r])));
            }
            lowest = lowest.min(probs[r]);
        }
    }
    Ok(lowest)
}
