use rand::seq::index;
use rand::Rng;

use crate::feedback::{Dataset, Posterior, Query};

/// Pads a candidate list that has a single point with the lowest other
/// index, so the query stays well formed. With one live candidate the
/// search terminates this round either way.
fn into_query(mut indices: Vec<usize>, n: usize) -> Query {
    if indices.len() < 2 {
        let filler = (0..n).find(|i| !indices.contains(i)).expect("datasets hold two points");
        indices.push(filler);
    }
    indices.sort_unstable();
    Query::new(indices, n).expect("candidates are distinct and in range")
}

/// The `k` heaviest points, ties to the lower index, returned in index
/// order. With fewer than `k` positive-mass points all of them are queried.
pub fn select_topk_fallback(posterior: &Posterior, k: usize) -> Query {
    let mass = posterior.mass();
    let mut order: Vec<usize> = posterior.support().collect();
    order.sort_by(|&a, &b| mass[b].total_cmp(&mass[a]).then(a.cmp(&b)));
    order.truncate(k);
    into_query(order, posterior.len())
}

/// `k` positive-mass points drawn uniformly without replacement.
pub fn select_random_baseline<R: Rng + ?Sized>(posterior: &Posterior, k: usize, rng: &mut R) -> Query {
    let support: Vec<usize> = posterior.support().collect();
    let picked = if support.len() <= k {
        support
    } else {
        index::sample(rng, support.len(), k)
            .into_iter()
            .map(|s| support[s])
            .collect()
    };
    into_query(picked, posterior.len())
}

/// The posterior median `I(1/2)` and the next positive-mass point to its
/// right (or, at the right edge, to its left). When the median is the only
/// live point its plain neighbor is used.
pub fn select_median_bisection(data: &Dataset, posterior: &Posterior) -> Query {
    debug_assert!(data.is_line());
    let mass = posterior.mass();
    let n = mass.len();
    let median = posterior.quantile_index(0.5).expect("0.5 is a valid level");
    let partner = (median + 1..n)
        .find(|&i| mass[i] > 0.0)
        .or_else(|| (0..median).rev().find(|&i| mass[i] > 0.0))
        .unwrap_or(if median + 1 < n { median + 1 } else { median - 1 });
    let mut pair = vec![median, partner];
    pair.sort_unstable();
    Query::new(pair, n).expect("distinct indices")
}
