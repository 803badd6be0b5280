mod common;

use noisy_search::adversarial::{gen_adversarial_points, RATIO_TOL};
use noisy_search::feedback::subset_gain_bound;
use noisy_search::strategies::{build_interval_set, check_interval_set};
use noisy_search::{
    expected_info_gain, kl_divergence, select_query, Dataset, Family, Norm, Posterior, Query, StrategyKind, UserModel,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn family() -> impl Strategy<Value = Family> {
    prop_oneof![Just(Family::Polynomial), Just(Family::Exponential)]
}

/// Distinct sorted positions on the line.
fn positions(max_n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.05f64..3.0, 2..=max_n).prop_map(|gaps| {
        gaps.iter()
            .scan(0.0, |acc, g| {
                *acc += g;
                Some(*acc)
            })
            .collect()
    })
}

/// Dataset, prior weights (some zero, at least one positive) and a query.
fn instance(max_n: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<usize>)> {
    positions(max_n).prop_flat_map(|x| {
        let n = x.len();
        let weights = prop::collection::vec(prop_oneof![1 => Just(0.0), 4 => 0.01f64..1.0], n);
        let query = prop::sample::subsequence((0..n).collect::<Vec<_>>(), 2..=n.min(4));
        (Just(x), weights, query)
    })
}

proptest! {
    #[test]
    fn response_probs_are_distributions(
        (x, _, q) in instance(10),
        fam in family(),
        theta in 0.1f64..6.0,
        t in 0usize..10,
    ) {
        let n = x.len();
        let target = t % n;
        prop_assume!(!q.contains(&target));
        let data = Dataset::line(x.clone()).unwrap();
        let model = UserModel::new(fam, theta).unwrap();
        let probs = model.response_probs(&data, &Query::new(q.clone(), n).unwrap(), target).unwrap();
        let p = probs.probs();
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        // Closer query points are never less likely.
        for a in 0..q.len() {
            for b in 0..q.len() {
                if (x[target] - x[q[a]]).abs() < (x[target] - x[q[b]]).abs() {
                    prop_assert!(p[a] >= p[b]);
                }
            }
        }
    }

    #[test]
    fn update_matches_enumeration(
        (x, w, q) in instance(8),
        fam in family(),
        theta in 0.25f64..4.0,
        r in 0usize..4,
    ) {
        let n = x.len();
        let r = r % q.len();
        prop_assume!(w.iter().enumerate().any(|(i, &v)| v > 0.0 && !q.contains(&i)));
        let data = Dataset::line(x).unwrap();
        let prior = Posterior::from_weights(w).unwrap();
        let model = UserModel::new(fam, theta).unwrap();
        let got = prior.update(&data, &model, &Query::new(q.clone(), n).unwrap(), r).unwrap();
        let want = common::bayes(&data, fam, theta, prior.mass(), &q, r).unwrap();
        for (a, b) in got.mass().iter().zip(&want) {
            prop_assert!((a - b).abs() < 1e-9);
        }
        prop_assert!((got.mass().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for &i in &q {
            prop_assert_eq!(got.mass()[i], 0.0);
        }
    }

    #[test]
    fn expected_gain_matches_entropy_drop(
        (x, mut w, q) in instance(8),
        fam in family(),
        theta in 0.25f64..4.0,
        subset_mask in prop::collection::vec(any::<bool>(), 8),
    ) {
        let n = x.len();
        for &i in &q {
            w[i] = 0.0;
        }
        prop_assume!(w.iter().any(|&v| v > 0.0));
        let data = Dataset::line(x).unwrap();
        let prior = Posterior::from_weights(w).unwrap();
        let model = UserModel::new(fam, theta).unwrap();
        let query = Query::new(q.clone(), n).unwrap();
        let gain = expected_info_gain(&prior, &data, &model, &query);

        let a = prior.mass();
        let marginal = common::marginal(&data, fam, theta, a, &q);
        let direct: f64 = (0..q.len())
            .filter_map(|r| common::bayes(&data, fam, theta, a, &q, r).map(|post| (r, post)))
            .map(|(r, post)| marginal[r] * (common::entropy(a) - common::entropy(&post)))
            .sum();
        prop_assert!((gain - direct).abs() < 1e-9);
        prop_assert!(gain >= -1e-15);

        let subset: Vec<usize> = (0..n).filter(|&i| subset_mask[i]).collect();
        prop_assert!(subset_gain_bound(&prior, &data, &model, &query, &subset) <= gain + 1e-12);
    }

    #[test]
    fn mixture_minimizes_weighted_divergence(
        k in 2usize..=8,
        rows in prop::collection::vec(prop::collection::vec(0.001f64..1.0, 8), 1..=8),
        alpha in prop::collection::vec(0.001f64..1.0, 8),
        r in prop::collection::vec(0.001f64..1.0, 8),
    ) {
        let norm = |v: &[f64]| { let s: f64 = v.iter().sum(); v.iter().map(|x| x / s).collect::<Vec<_>>() };
        let phis: Vec<Vec<f64>> = rows.iter().map(|row| norm(&row[..k])).collect();
        let alpha = &alpha[..phis.len()];
        let r = norm(&r[..k]);
        let total: f64 = alpha.iter().sum();
        let bar: Vec<f64> = (0..k).map(|j| alpha.iter().zip(&phis).map(|(a, p)| a * p[j]).sum::<f64>() / total).collect();
        let lhs: f64 = alpha.iter().zip(&phis).map(|(a, p)| a * kl_divergence(p, &r).unwrap()).sum();
        let rhs: f64 = alpha.iter().zip(&phis).map(|(a, p)| a * kl_divergence(p, &bar).unwrap()).sum();
        prop_assert!(lhs - rhs >= -1e-12);
    }

    #[test]
    fn quantile_index_is_smallest_reaching_level(w in prop::collection::vec(prop_oneof![Just(0.0), 0.01f64..1.0], 1..40), p in 0.001f64..=1.0) {
        prop_assume!(w.iter().any(|&v| v > 0.0));
        let post = Posterior::from_weights(w).unwrap();
        let i = post.quantile_index(p).unwrap();
        let c = post.cumulative();
        prop_assert!(c[i] >= p || i == c.len() - 1);
        if i > 0 {
            prop_assert!(c[i - 1] < p);
        }
        prop_assert!(post.mass()[i] > 0.0);
    }

    #[test]
    fn strategies_query_live_points(
        (x, w, _) in instance(30),
        seed in any::<u64>(),
        k in 2usize..5,
    ) {
        prop_assume!(w.iter().filter(|&&v| v > 0.0).count() >= 2);
        let n = x.len();
        let data = Dataset::line(x).unwrap();
        let post = Posterior::from_weights(w).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for kind in StrategyKind::ALL {
            let kk = match kind {
                StrategyKind::BinaryQuantile | StrategyKind::MedianBisection | StrategyKind::DBall => 2,
                _ => k,
            };
            if kind.check_applicable(&data, kk).is_err() {
                continue;
            }
            let sel = select_query(kind, &data, &post, kk, &mut rng).unwrap();
            let q = sel.query.indices();
            // The ball strategy lists q1 (inside the ball) first.
            if kind != StrategyKind::DBall {
                prop_assert!(q.windows(2).all(|p| p[0] < p[1]));
            }
            prop_assert!(q.iter().enumerate().all(|(a, i)| !q[a + 1..].contains(i)));
            prop_assert!(q.iter().all(|&i| i < n));
            prop_assert!(q.len() <= kk);
            prop_assert!(q.iter().all(|&i| post.mass()[i] > 0.0));
        }
    }

    #[test]
    fn interval_sets_respect_constraints(
        (x, w, _) in instance(60),
        k in 2usize..6,
    ) {
        prop_assume!(w.iter().any(|&v| v > 0.0));
        let data = Dataset::line(x).unwrap();
        let post = Posterior::from_weights(w).unwrap();
        if let Some(set) = build_interval_set(&data, &post, k) {
            prop_assert!(check_interval_set(&data, &post, &set, k).is_ok());
        }
    }

    #[test]
    fn adversarial_recursion_holds(theta in 0.3f64..5.0, x1 in -10.0f64..10.0, gap in 0.01f64..10.0, n in 2usize..60) {
        match gen_adversarial_points(n, theta, x1, x1 + gap) {
            Ok(inst) => {
                prop_assert!(inst.recursion_error() <= RATIO_TOL);
                prop_assert!(inst.check_similarity_cap().is_ok());
            }
            Err(noisy_search::Error::Overflow { max_n, .. }) => prop_assert!(max_n < n),
            Err(e) => prop_assert!(false, "{e}"),
        }
    }
}

#[test]
fn planar_update_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let data = Dataset::random_cube(7, 3, Norm::euclidean(), &mut rng).unwrap();
    let prior = Posterior::uniform(7);
    for fam in [Family::Polynomial, Family::Exponential] {
        let model = UserModel::new(fam, 1.5).unwrap();
        for q in common::combinations(7, 3) {
            let query = Query::new(q.clone(), 7).unwrap();
            for r in 0..3 {
                let got = prior.update(&data, &model, &query, r).unwrap();
                let want = common::bayes(&data, fam, 1.5, prior.mass(), &q, r).unwrap();
                for (a, b) in got.mass().iter().zip(&want) {
                    assert!((a - b).abs() < 1e-12);
                }
            }
        }
    }
}
