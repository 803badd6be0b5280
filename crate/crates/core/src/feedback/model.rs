use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Dataset, Query, PROB_TOL};
use crate::error::{Error, Result};

/// How similarity decays with distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// `S(x, y) = d(x, y)^-theta`
    Polynomial,
    /// `S(x, y) = exp(-theta * d(x, y))`
    Exponential,
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Family::Polynomial => "polynomial",
            Family::Exponential => "exponential",
        })
    }
}

/// A similarity family together with the user sharpness `theta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModel")]
pub struct UserModel {
    family: Family,
    theta: f64,
}

#[derive(Deserialize)]
struct RawModel {
    family: Family,
    theta: f64,
}

impl TryFrom<RawModel> for UserModel {
    type Error = Error;

    fn try_from(raw: RawModel) -> Result<Self> {
        UserModel::new(raw.family, raw.theta)
    }
}

impl UserModel {
    pub fn new(family: Family, theta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(Error::InvalidModel(format!("theta must be positive, got {theta}")));
        }
        Ok(UserModel { family, theta })
    }

    pub fn polynomial(theta: f64) -> Result<Self> {
        Self::new(Family::Polynomial, theta)
    }

    pub fn exponential(theta: f64) -> Result<Self> {
        Self::new(Family::Exponential, theta)
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn with_theta(&self, theta: f64) -> Result<Self> {
        Self::new(self.family, theta)
    }

    /// Similarity of two points at the given distance.
    pub fn similarity(&self, distance: f64) -> Result<f64> {
        if !(distance > 0.0) {
            return Err(Error::CoincidentPoints(distance));
        }
        Ok(match self.family {
            Family::Polynomial => distance.powf(-self.theta),
            Family::Exponential => (-self.theta * distance).exp(),
        })
    }

    /// Turns distances from a target to the `k` query points into response
    /// probabilities, writing them to `out`.
    ///
    /// Weights are taken relative to the closest query point, so the largest
    /// weight is exactly 1 and the normalizer never underflows. Distances must
    /// be positive.
    pub(crate) fn fill_probs(&self, distances: &[f64], out: &mut [f64]) {
        debug_assert_eq!(distances.len(), out.len());
        let nearest = distances.iter().copied().fold(f64::INFINITY, f64::min);
        match self.family {
            Family::Polynomial => {
                for (o, &d) in out.iter_mut().zip(distances) {
                    *o = (nearest / d).powf(self.theta);
                }
            }
            Family::Exponential => {
                for (o, &d) in out.iter_mut().zip(distances) {
                    *o = (-self.theta * (d - nearest)).exp();
                }
            }
        }
        let total: f64 = out.iter().sum();
        out.iter_mut().for_each(|o| *o /= total);
    }

    /// `Pr(R = r | Q, T = target)` for every position `r` of the query.
    pub fn response_probs(&self, data: &Dataset, query: &Query, target: usize) -> Result<ResponseDistribution> {
        if query.contains(target) {
            return Err(Error::TargetInQuery { target });
        }
        let distances: Vec<f64> = query.iter().map(|q| data.distance(target, q)).collect();
        let mut probs = vec![0.0; distances.len()];
        self.fill_probs(&distances, &mut probs);
        Ok(ResponseDistribution(probs))
    }
}

/// A probability vector over the `k` positions of a query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ResponseDistribution(Vec<f64>);

impl ResponseDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidDistribution("empty".into()));
        }
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidDistribution("entries must lie in [0, 1]".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PROB_TOL {
            return Err(Error::InvalidDistribution(format!("entries sum to {total}")));
        }
        Ok(ResponseDistribution(probs))
    }

    pub(crate) fn from_raw(probs: Vec<f64>) -> Self {
        ResponseDistribution(probs)
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Draws a response position (0-based) by inverse-CDF sampling.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (r, &p) in self.0.iter().enumerate() {
            acc += p;
            if u < acc {
                return r;
            }
        }
        // Rounding left the cumulative sum just under 1.
        self.0.iter().rposition(|&p| p > 0.0).unwrap_or(0)
    }
}
