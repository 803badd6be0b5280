use super::{Dataset, Posterior, Query, UserModel};
use crate::error::{Error, Result};

/// Shannon entropy in bits, with `0 log 0 = 0`.
pub fn entropy(p: &[f64]) -> f64 {
    -p.iter().filter(|&&x| x > 0.0).map(|&x| x * x.log2()).sum::<f64>()
}

/// `D(a || b)` in bits. Requires `b_i > 0` wherever `a_i > 0`.
pub fn kl_divergence(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::InvalidDistribution(format!(
            "length mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let mut d = 0.0;
    for (index, (&p, &q)) in a.iter().zip(b).enumerate() {
        if p > 0.0 {
            if q <= 0.0 {
                return Err(Error::SupportViolation { index, p });
            }
            d += p * (p / q).log2();
        }
    }
    Ok(d.max(0.0))
}

/// `D(p || q)` between the Bernoulli distributions `(p, 1-p)` and `(q, 1-q)`.
pub fn binary_kl(p: f64, q: f64) -> Result<f64> {
    kl_divergence(&[p, 1.0 - p], &[q, 1.0 - q])
}

/// Response rows `p_i` for every support point, flattened `k` per row.
///
/// A shown target would be picked by the user, so a queried point answers
/// its own position with certainty.
fn response_rows(posterior: &Posterior, data: &Dataset, model: &UserModel, query: &Query) -> (Vec<usize>, Vec<f64>) {
    let k = query.len();
    let support: Vec<usize> = posterior.support().collect();
    let mut rows = vec![0.0; support.len() * k];
    let mut dist = vec![0.0; k];
    for (row, &i) in rows.chunks_mut(k).zip(&support) {
        if let Some(r) = query.position_of(i) {
            row[r] = 1.0;
            continue;
        }
        for (d, q) in dist.iter_mut().zip(query.iter()) {
            *d = data.distance(i, q);
        }
        model.fill_probs(&dist, row);
    }
    (support, rows)
}

fn weighted_divergence(weights: &[f64], rows: &[f64], reference: &[f64]) -> f64 {
    let k = reference.len();
    weights
        .iter()
        .zip(rows.chunks(k))
        .map(|(&a, p)| a * kl_divergence(p, reference).expect("reference covers every row"))
        .sum()
}

/// Expected entropy reduction of one query in bits, `sum_i a_i D(p_i || A)`.
///
/// When the queried points carry no mass this is exactly the expected drop
/// from `H(a)` to the entropy of the Bayes-updated posterior.
pub fn expected_info_gain(posterior: &Posterior, data: &Dataset, model: &UserModel, query: &Query) -> f64 {
    let k = query.len();
    let (support, rows) = response_rows(posterior, data, model, query);
    let weights: Vec<f64> = support.iter().map(|&i| posterior.mass()[i]).collect();
    let mut marginal = vec![0.0; k];
    for (&a, p) in weights.iter().zip(rows.chunks(k)) {
        for (m, &x) in marginal.iter_mut().zip(p) {
            *m += a * x;
        }
    }
    weighted_divergence(&weights, &rows, &marginal)
}

/// Lower bound on the expected gain from a subset of data points:
/// `sum_{i in subset} a_i D(p_i || phi)` with `phi` the mass-weighted mean
/// response distribution over the subset.
pub fn subset_gain_bound(
    posterior: &Posterior,
    data: &Dataset,
    model: &UserModel,
    query: &Query,
    subset: &[usize],
) -> f64 {
    let k = query.len();
    let (support, rows) = response_rows(posterior, data, model, query);
    let mut weights = Vec::new();
    let mut picked = Vec::new();
    for (s, &i) in support.iter().enumerate() {
        if subset.contains(&i) {
            weights.push(posterior.mass()[i]);
            picked.extend_from_slice(&rows[s * k..(s + 1) * k]);
        }
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    let mut mean = vec![0.0; k];
    for (&a, p) in weights.iter().zip(picked.chunks(k)) {
        for (m, &x) in mean.iter_mut().zip(p) {
            *m += a * x / total;
        }
    }
    weighted_divergence(&weights, &picked, &mean)
}
