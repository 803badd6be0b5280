//! The geometric point sequence on which a larger query size barely helps.
//!
//! Points follow `x_{i+1} = (x_i - x_1 2^{-1/theta}) / (1 - 2^{-1/theta})`,
//! so that `((x_{i+1} - x_i) / (x_{i+1} - x_1))^theta = 1/2`. Under the
//! polynomial model every point is then at most twice as similar to any other
//! point as it is to `x_1`, which caps the chance of the `j`-th query point
//! being picked at `2/j`.

use std::path::Path;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feedback::{Dataset, Query, UserModel};

/// Relative tolerance of the defining ratio and of the similarity checks.
pub const RATIO_TOL: f64 = 1e-9;

/// Query size and point count up to which the response bound is checked
/// over every (query, target) pair.
pub const EXHAUSTIVE_MAX_N: usize = 12;
pub const EXHAUSTIVE_MAX_K: usize = 4;

/// Number of random (query, target) pairs checked above those limits.
pub const SAMPLED_PAIRS: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdversarialInstance {
    pub n: usize,
    pub theta: f64,
    pub x1: f64,
    pub x2: f64,
    pub points: Vec<f64>,
}

fn check_params(theta: f64, x1: f64, x2: f64) -> Result<()> {
    if !(theta > 0.0 && theta.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "theta must be positive and finite, got {theta}"
        )));
    }
    if !(x1.is_finite() && x2.is_finite() && x1 < x2) {
        return Err(Error::InvalidArgument(format!("need finite x1 < x2, got {x1}, {x2}")));
    }
    Ok(())
}

/// Iterates the recursion until `limit` points exist or the next point (or
/// its distance to `x1`) is no longer finite.
fn grow(theta: f64, x1: f64, x2: f64, limit: usize) -> Vec<f64> {
    let h = (-1.0 / theta).exp2();
    let mut points = vec![x1, x2];
    while points.len() < limit {
        let last = *points.last().expect("non-empty");
        let next = (last - x1 * h) / (1.0 - h);
        if !next.is_finite() || !(next - x1).is_finite() || next <= last {
            break;
        }
        points.push(next);
    }
    points
}

/// Largest `n` for which the recursion stays finite.
pub fn max_points(theta: f64, x1: f64, x2: f64) -> Result<usize> {
    check_params(theta, x1, x2)?;
    Ok(grow(theta, x1, x2, usize::MAX).len())
}

pub fn gen_adversarial_points(n: usize, theta: f64, x1: f64, x2: f64) -> Result<AdversarialInstance> {
    check_params(theta, x1, x2)?;
    if n < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 points, got {n}")));
    }
    let points = grow(theta, x1, x2, n);
    if points.len() < n {
        return Err(Error::Overflow {
            index: points.len() + 1,
            max_n: points.len(),
            theta,
        });
    }
    Ok(AdversarialInstance {
        n,
        theta,
        x1,
        x2,
        points,
    })
}

impl AdversarialInstance {
    pub fn dataset(&self) -> Result<Dataset> {
        Dataset::line(self.points.clone())
    }

    pub fn model(&self) -> UserModel {
        UserModel::polynomial(self.theta).expect("theta validated at construction")
    }

    /// Largest relative deviation of `((x_{i+1} - x_i) / (x_{i+1} - x_1))^theta`
    /// from 1/2, over all `i > 1`.
    pub fn recursion_error(&self) -> f64 {
        let x = &self.points;
        (1..x.len().saturating_sub(1))
            .map(|i| {
                let ratio = ((x[i + 1] - x[i]) / (x[i + 1] - x[0])).powf(self.theta);
                (ratio - 0.5).abs() / 0.5
            })
            .fold(0.0, f64::max)
    }

    /// Largest `S(x, x_i) / S(x, x_1)` over data points `x` distinct from
    /// both `x_i` and `x_1`. The construction keeps it at most 2.
    pub fn max_similarity_ratio(&self) -> f64 {
        let x = &self.points;
        let mut worst: f64 = 0.0;
        for a in 1..x.len() {
            for i in 1..x.len() {
                if i != a {
                    let r = ((x[a] - x[0]).abs() / (x[a] - x[i]).abs()).powf(self.theta);
                    worst = worst.max(r);
                }
            }
        }
        worst
    }

    /// Checks the similarity cap; on failure reports the worst ratio.
    pub fn check_similarity_cap(&self) -> std::result::Result<f64, f64> {
        let worst = self.max_similarity_ratio();
        if worst <= 2.0 * (1.0 + RATIO_TOL) {
            Ok(worst)
        } else {
            Err(worst)
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Parses an exported instance and checks that the header matches the
    /// points and that the points satisfy the recursion.
    pub fn from_json(text: &str) -> Result<Self> {
        let inst: Self = serde_json::from_str(text)?;
        inst.validate()?;
        Ok(inst)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    fn validate(&self) -> Result<()> {
        check_params(self.theta, self.x1, self.x2)?;
        if self.points.len() != self.n || self.n < 2 {
            return Err(Error::InvalidDataset(format!(
                "header says n = {} but {} points are listed",
                self.n,
                self.points.len()
            )));
        }
        if self.points[0] != self.x1 || self.points[1] != self.x2 {
            return Err(Error::InvalidDataset("first two points differ from x1, x2".into()));
        }
        if self.points.windows(2).any(|w| !(w[0] < w[1])) || self.points.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidDataset(
                "points must be finite and strictly increasing".into(),
            ));
        }
        let err = self.recursion_error();
        if err > RATIO_TOL {
            return Err(Error::InvalidDataset(format!(
                "points do not follow the recursion (relative error {err:e})"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    /// 1-based query indices.
    pub query: Vec<usize>,
    /// 1-based target index.
    pub target: usize,
    /// 1-based position within the query.
    pub position: usize,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseBoundReport {
    pub n: usize,
    pub k: usize,
    pub exhaustive: bool,
    /// Number of (query, target) pairs checked.
    pub checked: u64,
    /// Largest `Pr(R = j | T = x) * j / 2` seen.
    pub max_ratio: f64,
    pub counterexample: Option<Counterexample>,
}

impl ResponseBoundReport {
    pub fn passed(&self) -> bool {
        self.counterexample.is_none()
    }
}

struct BoundScan {
    checked: u64,
    max_ratio: f64,
    counterexample: Option<Counterexample>,
}

impl BoundScan {
    fn visit(&mut self, data: &Dataset, model: &UserModel, query: &Query, target: usize) -> Result<()> {
        let probs = model.response_probs(data, query, target)?;
        self.checked += 1;
        for (j, &p) in probs.probs().iter().enumerate() {
            let ratio = p * (j + 1) as f64 / 2.0;
            if ratio > self.max_ratio {
                self.max_ratio = ratio;
            }
            if ratio > 1.0 + RATIO_TOL && self.counterexample.is_none() {
                self.counterexample = Some(Counterexample {
                    query: query.iter().map(|q| q + 1).collect(),
                    target: target + 1,
                    position: j + 1,
                    probability: p,
                });
            }
        }
        Ok(())
    }
}

/// Advances `c` to the next sorted `k`-subset of `0..n`; false when done.
fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if c[i] < n - k + i {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Checks `Pr(R = j | T = x) <= 2/j` under the polynomial model with the
/// instance's `theta`. Small instances are enumerated completely; larger ones
/// are checked on [`SAMPLED_PAIRS`] random (query, target) pairs.
pub fn verify_response_bound<R: Rng + ?Sized>(
    instance: &AdversarialInstance,
    k: usize,
    rng: &mut R,
) -> Result<ResponseBoundReport> {
    let n = instance.n;
    if k < 2 || k >= n {
        return Err(Error::InvalidArgument(format!("need 2 <= k < n, got k = {k}, n = {n}")));
    }
    let data = instance.dataset()?;
    let model = instance.model();
    let exhaustive = n <= EXHAUSTIVE_MAX_N && k <= EXHAUSTIVE_MAX_K;
    let mut scan = BoundScan {
        checked: 0,
        max_ratio: 0.0,
        counterexample: None,
    };
    if exhaustive {
        let mut comb: Vec<usize> = (0..k).collect();
        loop {
            let query = Query::new(comb.clone(), n)?;
            for target in (0..n).filter(|t| !query.contains(*t)) {
                scan.visit(&data, &model, &query, target)?;
            }
            if !next_combination(&mut comb, n) {
                break;
            }
        }
    } else {
        for _ in 0..SAMPLED_PAIRS {
            let mut picked = sample(rng, n, k + 1).into_vec();
            let target = picked.pop().expect("k + 1 >= 1");
            picked.sort_unstable();
            let query = Query::new(picked, n)?;
            scan.visit(&data, &model, &query, target)?;
        }
    }
    Ok(ResponseBoundReport {
        n,
        k,
        exhaustive,
        checked: scan.checked,
        max_ratio: scan.max_ratio,
        counterexample: scan.counterexample,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Horizon {
    /// Number of rounds by which the target is found with probability at
    /// most 1/2.
    pub tau: f64,
    /// Lower bound on the expected number of queries, `tau / 2`.
    pub expected_queries: f64,
}

/// `tau = log2(n / 2k) / (log2 log2 k + 2)` for `k >= 3`, `n > 2k`.
pub fn lower_bound_horizon(n: usize, k: usize) -> Result<Horizon> {
    if k < 3 {
        return Err(Error::InvalidArgument(format!("the lower bound needs k >= 3, got {k}")));
    }
    if n <= 2 * k {
        return Err(Error::InvalidArgument(format!(
            "the lower bound needs n > 2k, got n = {n}, k = {k}"
        )));
    }
    let tau = (n as f64 / (2 * k) as f64).log2() / ((k as f64).log2().log2() + 2.0);
    Ok(Horizon {
        tau,
        expected_queries: tau / 2.0,
    })
}

/// `(k/n) (4 log2 k)^(t-1)`, clamped to 1: the largest probability that the
/// `t`-th query contains a uniformly drawn target.
pub fn success_probability_bound(n: usize, k: usize, t: usize) -> f64 {
    let exp = t.saturating_sub(1) as i32;
    (k as f64 / n as f64 * (4.0 * (k as f64).log2()).powi(exp)).min(1.0)
}
