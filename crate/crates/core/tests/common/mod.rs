//! Reference implementations written directly from the model definitions,
//! without the library's numerically stabilized code paths.

#![allow(dead_code)]

use noisy_search::{Dataset, Family};

pub fn euclid(data: &Dataset, i: usize, j: usize) -> f64 {
    data.point(i)
        .iter()
        .zip(data.point(j))
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

pub fn similarity(family: Family, theta: f64, d: f64) -> f64 {
    match family {
        Family::Polynomial => d.powf(-theta),
        Family::Exponential => (-theta * d).exp(),
    }
}

/// `Pr(R = r | T = target)` for every `r`, from raw similarities.
pub fn response_probs(data: &Dataset, family: Family, theta: f64, query: &[usize], target: usize) -> Vec<f64> {
    let s: Vec<f64> = query
        .iter()
        .map(|&q| similarity(family, theta, euclid(data, target, q)))
        .collect();
    let total: f64 = s.iter().sum();
    s.iter().map(|v| v / total).collect()
}

/// Posterior after observing response `r` (the target was not shown), by
/// enumerating every candidate target. `None` if the response is impossible.
pub fn bayes(data: &Dataset, family: Family, theta: f64, prior: &[f64], query: &[usize], r: usize) -> Option<Vec<f64>> {
    let joint: Vec<f64> = (0..prior.len())
        .map(|i| {
            if query.contains(&i) || prior[i] == 0.0 {
                0.0
            } else {
                prior[i] * response_probs(data, family, theta, query, i)[r]
            }
        })
        .collect();
    let z: f64 = joint.iter().sum();
    (z > 0.0).then(|| joint.iter().map(|v| v / z).collect())
}

/// Marginal response distribution for a prior with no mass on the query.
pub fn marginal(data: &Dataset, family: Family, theta: f64, prior: &[f64], query: &[usize]) -> Vec<f64> {
    let mut out = vec![0.0; query.len()];
    for (i, &a) in prior.iter().enumerate() {
        if a > 0.0 {
            for (o, p) in out.iter_mut().zip(response_probs(data, family, theta, query, i)) {
                *o += a * p;
            }
        }
    }
    out
}

pub fn entropy(p: &[f64]) -> f64 {
    -p.iter().filter(|&&v| v > 0.0).map(|&v| v * v.log2()).sum::<f64>()
}

pub fn kl(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .filter(|(x, _)| **x > 0.0)
        .map(|(x, y)| x * (x / y).log2())
        .sum()
}

/// All sorted `k`-subsets of `0..n`.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Least-squares line `y = a x + b`; returns `(a, b, r_squared)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let m = x.len() as f64;
    let mx = x.iter().sum::<f64>() / m;
    let my = y.iter().sum::<f64>() / m;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let a = sxy / sxx;
    let b = my - a * mx;
    (a, b, sxy * sxy / (sxx * syy))
}
