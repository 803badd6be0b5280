use log::warn;

use super::{CheckFailure, StrategyError};
use crate::feedback::{Dataset, Posterior, Query};

/// Mass a ball must hold to be a candidate: `(14 D)^-D / 2`.
pub fn ball_mass_threshold(dim: usize) -> f64 {
    let base = 14.0 * dim as f64;
    0.5 * base.powi(-(dim as i32))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BallSelection {
    pub query: Query,
    /// Center of the smallest heavy ball `B`.
    pub center: usize,
    /// Radius `lambda` of `B`.
    pub radius: f64,
    /// Posterior mass inside `B`.
    pub ball_mass: f64,
    /// No live point lay outside the 7-lambda ball; the two heaviest points
    /// were queried instead.
    pub fallback: bool,
}

/// Finds the smallest ball (centered at a data point, radius taken from the
/// pairwise distances) whose posterior mass reaches
/// [`ball_mass_threshold`], ties to the heavier ball. Queries a point of
/// the ball and the live point closest to it outside the concentric ball of
/// seven times the radius.
pub fn select_dball(data: &Dataset, posterior: &Posterior) -> Result<BallSelection, StrategyError> {
    let positive = posterior.support_size();
    if positive < 2 {
        return Err(StrategyError::InsufficientCandidates { positive });
    }
    let n = data.len();
    let mass = posterior.mass();
    let threshold = ball_mass_threshold(data.dim());
    let table = data.neighbor_table();

    // Heavy centers first so a small radius is found early and prunes the rest.
    let mut centers: Vec<usize> = (0..n).collect();
    centers.sort_by(|&a, &b| mass[b].total_cmp(&mass[a]).then(a.cmp(&b)));

    // (radius, mass, center)
    let mut best: Option<(f64, f64, usize)> = None;
    let better = |cand: (f64, f64, usize), cur: Option<(f64, f64, usize)>| match cur {
        None => true,
        Some(b) => cand.0 < b.0 || (cand.0 == b.0 && (cand.1 > b.1 || (cand.1 == b.1 && cand.2 < b.2))),
    };
    for &c in &centers {
        let limit = best.map_or(f64::INFINITY, |b| b.0);
        let mut acc = mass[c];
        let mut found = (acc >= threshold).then_some(0.0);
        if found.is_none() {
            let mut row = table.row(c).peekable();
            while let Some((d, j)) = row.next() {
                if d > limit {
                    break;
                }
                acc += mass[j];
                // The closed ball takes every point at exactly this distance.
                while let Some(&(d2, j2)) = row.peek() {
                    if d2 != d {
                        break;
                    }
                    acc += mass[j2];
                    row.next();
                }
                if acc >= threshold {
                    found = Some(d);
                    break;
                }
            }
        }
        if let Some(radius) = found {
            let cand = (radius, acc, c);
            if better(cand, best) {
                best = Some(cand);
            }
        }
    }
    let (radius, ball_mass, center) = best.expect("the whole dataset is a heavy ball");

    // Any point of B works; prefer the center, else the heaviest point inside.
    let first = if mass[center] > 0.0 {
        center
    } else {
        table
            .row(center)
            .take_while(|&(d, _)| d <= radius)
            .max_by(|a, b| mass[a.1].total_cmp(&mass[b.1]).then(b.1.cmp(&a.1)))
            .map(|(_, j)| j)
            .expect("a heavy ball holds a live point")
    };
    let outer = 7.0 * radius;
    let second = table
        .row(first)
        .map(|(_, j)| j)
        .find(|&j| mass[j] > 0.0 && data.distance(center, j) > outer);

    let (pair, fallback) = match second {
        Some(j) => (vec![first, j], false),
        None => {
            warn!("no live point outside the 7-lambda ball (lambda = {radius}); querying the two heaviest points");
            (super::select_topk_fallback(posterior, 2).indices().to_vec(), true)
        }
    };
    Ok(BallSelection {
        query: Query::new(pair, n).expect("distinct indices"),
        center,
        radius,
        ball_mass,
        fallback,
    })
}

/// Verifies the two separation inequalities the gain argument relies on:
/// `|x - q1| <= |x - q2| / 3` for every point of `B`, and
/// `|x - q1| >= |x - q2| / 2` for every live point outside the 7-lambda ball.
pub fn check_ball_separation(data: &Dataset, posterior: &Posterior, sel: &BallSelection) -> Result<(), CheckFailure> {
    if sel.fallback {
        return Ok(());
    }
    let (q1, q2) = (sel.query.indices()[0], sel.query.indices()[1]);
    let slack = 1e-12;
    for x in 0..data.len() {
        let from_center = data.distance(sel.center, x);
        let (d1, d2) = (data.distance(x, q1), data.distance(x, q2));
        if from_center <= sel.radius && d1 > d2 / 3.0 * (1.0 + slack) {
            return Err(CheckFailure::new(
                x,
                format!("inside B but |x-q1| = {d1} > |x-q2|/3 = {}", d2 / 3.0),
            ));
        }
        if from_center > 7.0 * sel.radius && posterior.mass()[x] > 0.0 && d1 < d2 / 2.0 * (1.0 - slack) {
            return Err(CheckFailure::new(
                x,
                format!("outside B' but |x-q1| = {d1} < |x-q2|/2 = {}", d2 / 2.0),
            ));
        }
    }
    Ok(())
}
