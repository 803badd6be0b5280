//! Closed-form constants and query-complexity bounds, in bits and queries.
//!
//! These values are the thresholds the Monte-Carlo harness is checked
//! against. Logarithms are base 2 except inside [`response_floor`], whose
//! exponential is natural.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::adversarial::lower_bound_horizon;
use crate::error::Result;
use crate::feedback::binary_kl;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Units {
    Queries,
    Bits,
    Probability,
}

impl fmt::Display for Units {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Units::Queries => "queries",
            Units::Bits => "bits",
            Units::Probability => "probability",
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub name: String,
    pub inputs: BoundInputs,
    pub value: f64,
    pub units: Units,
}

impl fmt::Display for BoundReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {:.6} {}", self.name, self.value, self.units)
    }
}

/// Per-query gain floor of the binary-quantile strategy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainFloor {
    /// `2^theta / (1 + 2^theta)`: smallest probability of picking the
    /// closer query point for points of the shortest quartile interval.
    pub rho: f64,
    /// `1/4 + rho/2`
    pub phi: f64,
    /// `(D(rho || phi) + D(1/2 || phi)) / 4` bits.
    pub gain: f64,
}

pub fn gain_floor(theta: f64) -> GainFloor {
    let t = theta.exp2();
    let rho = t / (1.0 + t);
    let phi = 0.25 + 0.5 * rho;
    let gain = 0.25 * (binary_kl(rho, phi).expect("interior") + binary_kl(0.5, phi).expect("interior"));
    GainFloor { rho, phi, gain }
}

/// Expected-query upper bound of the binary-quantile strategy under the
/// polynomial model: `4 log2 n / G + 4`.
pub fn quantile_search_bound(n: usize, theta: f64) -> BoundReport {
    let floor = gain_floor(theta);
    BoundReport {
        name: "quantile_search_upper".into(),
        inputs: BoundInputs {
            n: Some(n),
            theta: Some(theta),
            ..Default::default()
        },
        value: 4.0 * (n as f64).log2() / floor.gain + 4.0,
        units: Units::Queries,
    }
}

/// Lower bound `beta` on the probability that a point of the interval
/// construction picks its own interval's query point under the exponential
/// model: `1 / (1 + 2 e^{-theta delta0} (1 + 1 / (theta delta0)))`.
pub fn response_floor(theta: f64, delta0: f64) -> f64 {
    let s = theta * delta0;
    1.0 / (1.0 + 2.0 * f64::exp(-s) * (1.0 + 1.0 / s))
}

/// Guaranteed expected gain of an interval query:
/// `(1/28) [beta log2(beta k) + (1 - beta) log2((1 - beta) k / (k - 1))]`.
pub fn interval_gain_floor(beta: f64, k: usize) -> f64 {
    let k = k as f64;
    (beta * (beta * k).log2() + (1.0 - beta) * ((1.0 - beta) * k / (k - 1.0)).log2()) / 28.0
}

/// `(14 D)^D log2 n`: the scale of the ball strategy's query bound, with the
/// unknown leading constant set to 1. Reported, never asserted.
pub fn ball_search_scale(n: usize, dim: usize) -> BoundReport {
    BoundReport {
        name: "ball_search_scale".into(),
        inputs: BoundInputs {
            n: Some(n),
            dim: Some(dim),
            ..Default::default()
        },
        value: (14.0 * dim as f64).powi(dim as i32) * (n as f64).log2(),
        units: Units::Queries,
    }
}

/// `log2 n / log2 k`: the query-count trend of the interval strategy, up to
/// its constant.
pub fn kary_trend(n: usize, k: usize) -> BoundReport {
    BoundReport {
        name: "kary_trend".into(),
        inputs: BoundInputs {
            n: Some(n),
            k: Some(k),
            ..Default::default()
        },
        value: (n as f64).log2() / (k as f64).log2(),
        units: Units::Queries,
    }
}

/// Expected-query lower bound for any algorithm on the adversarial
/// instance.
pub fn adversarial_lower_bound(n: usize, k: usize) -> Result<BoundReport> {
    let horizon = lower_bound_horizon(n, k)?;
    Ok(BoundReport {
        name: "adversarial_lower".into(),
        inputs: BoundInputs {
            n: Some(n),
            k: Some(k),
            ..Default::default()
        },
        value: horizon.expected_queries,
        units: Units::Queries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gain_floor_at_theta_one() {
        let g = gain_floor(1.0);
        assert!((g.rho - 2.0 / 3.0).abs() < 1e-15);
        assert!((g.phi - 7.0 / 12.0).abs() < 1e-15);
        // D(2/3 || 7/12) = 0.0211207, D(1/2 || 7/12) = 0.0203210
        assert!((g.gain - 0.010_360_4).abs() < 1e-6, "{}", g.gain);
    }

    #[test]
    fn gain_floor_positive_and_increasing() {
        let mut last = 0.0;
        for i in 1..=60 {
            let theta = 0.1 * i as f64;
            let g = gain_floor(theta);
            assert!(g.gain > last, "theta {theta}");
            assert!(0.5 < g.phi && g.phi < g.rho);
            last = g.gain;
        }
    }

    #[test]
    fn quantile_bound_value() {
        let b = quantile_search_bound(1024, 1.0);
        assert!((b.value - (40.0 / gain_floor(1.0).gain + 4.0)).abs() < 1e-9);
        assert!(b.value > 3800.0 && b.value < 3900.0);
        assert!(quantile_search_bound(1024, 2.0).value < b.value);
    }

    #[test]
    fn beta_values() {
        let b = response_floor(1.0, 1.0);
        assert!((b - 1.0 / (1.0 + 4.0 / std::f64::consts::E)).abs() < 1e-15);
        assert!((b - 0.4046).abs() < 1e-4);
        assert!(response_floor(50.0, 1.0) > 1.0 - 1e-12);
        // Below 1/2 exactly when 2 e^{-s} (1 + 1/s) > 1.
        for s in [0.5, 1.0, 1.5, 2.0, 3.0] {
            let below = 2.0 * f64::exp(-s) * (1.0 + 1.0 / s) > 1.0;
            assert_eq!(response_floor(s, 1.0) < 0.5, below);
        }
    }

    #[test]
    fn interval_gain_values() {
        let beta = 0.4046;
        let g = interval_gain_floor(beta, 16);
        let by_hand = (beta * (beta * 16.0f64).log2() + (1.0 - beta) * (0.5954f64 * 16.0 / 15.0).log2()) / 28.0;
        assert!((g - by_hand).abs() < 1e-12);
        assert!(g > 0.0);
        assert!(interval_gain_floor(0.5, 2).abs() < 1e-15);
        // Grows like beta log2 k.
        let g1 = interval_gain_floor(0.9, 1 << 10);
        let g2 = interval_gain_floor(0.9, 1 << 20);
        assert!(((g2 - g1) * 28.0 - 0.9 * 10.0).abs() < 1e-3);
    }

    #[test]
    fn reports_serialize() {
        let r = kary_trend(4096, 16);
        assert_eq!(r.value, 3.0);
        let json = serde_json::to_string(&r).unwrap();
        assert_eq!(
            json,
            r#"{"name":"kary_trend","inputs":{"n":4096,"k":16},"value":3.0,"units":"queries"}"#
        );
        assert!(ball_search_scale(2000, 2).value > 0.0);
        assert!(adversarial_lower_bound(8, 4).is_err());
    }
}
