//! Acceptance checks. Each check prints one PASS/FAIL line; the process
//! exits nonzero if any check fails.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use noisy_search::adversarial::{
    gen_adversarial_points, lower_bound_horizon, max_points, success_probability_bound, verify_response_bound,
    RATIO_TOL,
};
use noisy_search::analysis::{gain_floor, quantile_search_bound, response_floor};
use noisy_search::harness::{mismatch_sweep, run_experiment, CellResult, DatasetSpec, ExperimentSpec, Grid};
use noisy_search::{
    expected_info_gain, kl_divergence, Dataset, Family, Norm, Posterior, Query, StrategyKind, UserModel,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = fn() -> Result<String, String>;

const FAMILIES: [Family; 2] = [Family::Polynomial, Family::Exponential];

/// Query count allowed per log2 n for the binary-quantile strategy; fixed
/// from a calibration run, see the README.
const QUANTILE_QUERIES_PER_BIT: f64 = 25.0;

fn ensure(cond: bool, detail: String) -> Result<String, String> {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn random_weights(rng: &mut ChaCha8Rng, n: usize, zero_prob: f64) -> Vec<f64> {
    (0..n)
        .map(|_| {
            if rng.random::<f64>() < zero_prob {
                0.0
            } else {
                rng.random::<f64>() + 1e-3
            }
        })
        .collect()
}

fn normalize(w: &[f64]) -> Vec<f64> {
    let s: f64 = w.iter().sum();
    w.iter().map(|v| v / s).collect()
}

fn random_query(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<usize> {
    let mut q = rand::seq::index::sample(rng, n, k).into_vec();
    q.sort_unstable();
    q
}

fn grid_spec(
    seed: u64,
    episodes: usize,
    datasets: Vec<DatasetSpec>,
    strategy: StrategyKind,
    k: Vec<usize>,
    family: Family,
) -> ExperimentSpec {
    ExperimentSpec::new(
        seed,
        episodes,
        Grid {
            datasets,
            strategies: vec![strategy],
            k,
            family: vec![family],
            theta_true: vec![1.0],
            theta_assumed: None,
        },
    )
}

fn cell_mean(cell: &CellResult) -> Result<(f64, f64), String> {
    match (&cell.queries, &cell.error) {
        (Some(q), _) if cell.failed == 0 => Ok((q.mean, q.stderr)),
        (_, Some(e)) => Err(format!("cell error: {e}")),
        _ => Err(format!("{} episode(s) failed", cell.failed)),
    }
}

fn posterior_matches_enumeration() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    let mut updates = 0usize;
    for n in 2..=8 {
        for dim in [1, 2] {
            let data = Dataset::random_cube(n, dim, Norm::euclidean(), &mut rng).map_err(|e| e.to_string())?;
            let priors = [
                vec![1.0 / n as f64; n],
                normalize(
                    &random_weights(&mut rng, n, 0.25)
                        .iter()
                        .map(|w| w + 1e-9)
                        .collect::<Vec<_>>(),
                ),
            ];
            for family in FAMILIES {
                for theta in [0.5, 1.0, 2.0] {
                    let model = UserModel::new(family, theta).unwrap();
                    for prior in &priors {
                        let post = Posterior::from_weights(prior.clone()).unwrap();
                        for k in 2..=n.min(3) {
                            for q in common::combinations(n, k) {
                                let query = Query::new(q.clone(), n).unwrap();
                                for r in 0..k {
                                    let Some(expected) = common::bayes(&data, family, theta, prior, &q, r) else {
                                        continue;
                                    };
                                    let got = post.update(&data, &model, &query, r).map_err(|e| e.to_string())?;
                                    for (a, b) in got.mass().iter().zip(&expected) {
                                        worst = worst.max((a - b).abs());
                                    }
                                    updates += 1;
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    ensure(worst <= 1e-9, format!("max |diff| {worst:.2e} over {updates} updates"))
}

fn expected_gain_identity() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let n = rng.random_range(3..=8);
        let k = rng.random_range(2..=(n - 1).min(4));
        let dim = rng.random_range(1..=2);
        let family = FAMILIES[rng.random_range(0..2)];
        let theta = rng.random_range(0.25..4.0);
        let data = Dataset::random_cube(n, dim, Norm::euclidean(), &mut rng).map_err(|e| e.to_string())?;
        let q = random_query(&mut rng, n, k);
        let mut w = random_weights(&mut rng, n, 0.2);
        for &i in &q {
            w[i] = 0.0;
        }
        if w.iter().all(|&v| v == 0.0) {
            let free = (0..n).find(|i| !q.contains(i)).unwrap();
            w[free] = 1.0;
        }
        let prior = normalize(&w);
        let h0 = common::entropy(&prior);
        let marginal = common::marginal(&data, family, theta, &prior, &q);
        let direct: f64 = (0..k)
            .map(|r| match common::bayes(&data, family, theta, &prior, &q, r) {
                Some(post) => marginal[r] * (h0 - common::entropy(&post)),
                None => 0.0,
            })
            .sum();
        let model = UserModel::new(family, theta).unwrap();
        let got = expected_info_gain(
            &Posterior::from_weights(prior).unwrap(),
            &data,
            &model,
            &Query::new(q, n).unwrap(),
        );
        worst = worst.max((got - direct).abs());
    }
    ensure(worst <= 1e-9, format!("max |diff| {worst:.2e} over 1000 instances"))
}

fn divergence_mixture_inequality() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut worst = f64::INFINITY;
    for _ in 0..10_000 {
        let k = rng.random_range(2..=8);
        let l = rng.random_range(1..=8);
        let alpha: Vec<f64> = (0..l).map(|_| rng.random::<f64>() + 1e-3).collect();
        let phis: Vec<Vec<f64>> = (0..l)
            .map(|_| {
                normalize(
                    &random_weights(&mut rng, k, 0.15)
                        .iter()
                        .map(|v| v + 1e-12)
                        .collect::<Vec<_>>(),
                )
            })
            .collect();
        let r = normalize(&random_weights(&mut rng, k, 0.0));
        let total: f64 = alpha.iter().sum();
        let bar: Vec<f64> = (0..k)
            .map(|j| alpha.iter().zip(&phis).map(|(a, p)| a * p[j]).sum::<f64>() / total)
            .collect();
        let mut lhs = 0.0;
        let mut rhs = 0.0;
        for (a, p) in alpha.iter().zip(&phis) {
            lhs += a * kl_divergence(p, &r).map_err(|e| e.to_string())?;
            rhs += a * kl_divergence(p, &bar).map_err(|e| e.to_string())?;
        }
        worst = worst.min(lhs - rhs);
    }
    ensure(worst >= -1e-12, format!("min slack {worst:.3e} over 10000 triples"))
}

fn quantile_mean_query_bound() -> Result<String, String> {
    let n = 1024;
    let spec = grid_spec(
        21,
        500,
        vec![DatasetSpec::UniformGrid { n, spacing: 1.0 }],
        StrategyKind::BinaryQuantile,
        vec![2],
        Family::Polynomial,
    );
    let result = run_experiment(&spec).map_err(|e| e.to_string())?;
    let (mean, se) = cell_mean(&result.cells[0])?;
    let bound = quantile_search_bound(n, 1.0).value;
    let calibrated = QUANTILE_QUERIES_PER_BIT * (n as f64).log2();
    let g = gain_floor(1.0).gain;
    ensure(
        mean <= bound && mean <= calibrated && (g - 0.01036).abs() < 5e-6,
        format!("mean {mean:.2} (se {se:.2}) <= bound {bound:.1} (G = {g:.5}) and <= {calibrated:.0}"),
    )
}

fn quantile_gain_floor() -> Result<String, String> {
    let mut spec = grid_spec(
        22,
        100,
        vec![DatasetSpec::UniformGrid { n: 1024, spacing: 1.0 }],
        StrategyKind::BinaryQuantile,
        vec![2],
        Family::Polynomial,
    );
    spec.track_expected_gain = true;
    spec.keep_episodes = true;
    let result = run_experiment(&spec).map_err(|e| e.to_string())?;
    let g = gain_floor(1.0).gain;
    let episodes = result.cells[0].episode_results.as_ref().ok_or("no episodes kept")?;
    let mut rounds = 0usize;
    let mut below = 0usize;
    let mut lowest = f64::INFINITY;
    for ep in episodes {
        for rg in ep.expected_gains.iter().filter(|rg| rg.nondegenerate) {
            rounds += 1;
            lowest = lowest.min(rg.expected);
            if rg.expected < g {
                below += 1;
            }
        }
    }
    ensure(
        below == 0 && rounds > 0,
        format!("{below} of {rounds} non-degenerate rounds below G = {g:.5}; lowest {lowest:.5}"),
    )
}

fn quantile_log_scaling() -> Result<String, String> {
    let sizes: Vec<usize> = (6..=14).map(|e| 1usize << e).collect();
    let spec = grid_spec(
        23,
        200,
        sizes
            .iter()
            .map(|&n| DatasetSpec::UniformGrid { n, spacing: 1.0 })
            .collect(),
        StrategyKind::BinaryQuantile,
        vec![2],
        Family::Polynomial,
    );
    let result = run_experiment(&spec).map_err(|e| e.to_string())?;
    let xs: Vec<f64> = sizes.iter().map(|&n| (n as f64).log2()).collect();
    let ys = result
        .cells
        .iter()
        .map(|c| cell_mean(c).map(|m| m.0))
        .collect::<Result<Vec<_>, _>>()?;
    let (a, b, r2) = common::linear_fit(&xs, &ys);
    let means: Vec<String> = ys.iter().map(|m| format!("{m:.1}")).collect();
    ensure(
        r2 >= 0.95,
        format!(
            "R^2 {r2:.4}, slope {a:.2}/bit, intercept {b:.2}; means [{}]",
            means.join(", ")
        ),
    )
}

fn adversarial_instance_properties() -> Result<String, String> {
    let mut worst_recursion: f64 = 0.0;
    let mut worst_sim: f64 = 0.0;
    let mut worst_resp: f64 = 0.0;
    let mut pairs = 0u64;
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    for theta in [0.5, 1.0, 2.0, 4.0] {
        let cap = max_points(theta, 0.0, 1.0).map_err(|e| e.to_string())?;
        let big = gen_adversarial_points(cap.min(1024), theta, 0.0, 1.0).map_err(|e| e.to_string())?;
        worst_recursion = worst_recursion.max(big.recursion_error());
        for n in 2..=64.min(cap) {
            let inst = gen_adversarial_points(n, theta, 0.0, 1.0).map_err(|e| e.to_string())?;
            worst_recursion = worst_recursion.max(inst.recursion_error());
            worst_sim = worst_sim.max(inst.max_similarity_ratio());
        }
        for n in 3..=12 {
            let inst = gen_adversarial_points(n, theta, 0.0, 1.0).map_err(|e| e.to_string())?;
            for k in 2..=4.min(n - 1) {
                let report = verify_response_bound(&inst, k, &mut rng).map_err(|e| e.to_string())?;
                if let Some(cx) = report.counterexample {
                    return Err(format!("response bound violated: {cx:?}"));
                }
                assert!(report.exhaustive);
                pairs += report.checked;
                worst_resp = worst_resp.max(report.max_ratio);
            }
        }
    }
    ensure(
        worst_recursion <= RATIO_TOL && worst_sim <= 2.0 * (1.0 + RATIO_TOL) && worst_resp <= 1.0 + RATIO_TOL,
        format!(
            "recursion rel. err {worst_recursion:.1e}, max similarity ratio {worst_sim:.6}, \
             max j*Pr/2 {worst_resp:.6} over {pairs} (query, target) pairs"
        ),
    )
}

fn adversarial_success_envelope() -> Result<String, String> {
    let (n, k, episodes) = (1024, 4, 2000);
    let horizon = lower_bound_horizon(n, k).map_err(|e| e.to_string())?;
    let mut notes = Vec::new();
    let mut ok = true;
    // The quantile strategy is defined for two-point queries only; a smaller
    // query can only lower the success probability, so the k = 4 envelope
    // still applies.
    for (strategy, qk) in [
        (StrategyKind::BinaryQuantile, 2),
        (StrategyKind::RandomBaseline, k),
        (StrategyKind::TopKFallback, k),
    ] {
        let mut spec = grid_spec(
            25,
            episodes,
            vec![DatasetSpec::Adversarial {
                n,
                theta: 1.0,
                x1: 0.0,
                x2: 1.0,
            }],
            strategy,
            vec![qk],
            Family::Polynomial,
        );
        spec.max_queries = Some(64);
        spec.keep_episodes = true;
        let result = run_experiment(&spec).map_err(|e| e.to_string())?;
        let cell = &result.cells[0];
        let eps = cell.episode_results.as_ref().ok_or("no episodes kept")?;
        let mut worst_excess = f64::NEG_INFINITY;
        for t in 1..=6 {
            let hits = eps.iter().filter(|e| e.found && e.queries == t).count();
            let p = hits as f64 / episodes as f64;
            let b = success_probability_bound(n, k, t);
            let sigma = (b * (1.0 - b) / episodes as f64).sqrt();
            worst_excess = worst_excess.max(p - b - 3.0 * sigma);
            if p > b + 3.0 * sigma {
                ok = false;
                notes.push(format!("{strategy} t={t}: {p:.4} > {b:.4} + 3*{sigma:.4}"));
            }
        }
        let (mean, se) = cell_mean(cell)?;
        if mean < horizon.expected_queries - 3.0 * se {
            ok = false;
        }
        notes.push(format!(
            "{strategy}: mean {mean:.1} (se {se:.2}), worst excess {worst_excess:.4}"
        ));
    }
    notes.push(format!("lower bound {:.3}", horizon.expected_queries));
    ensure(ok, notes.join("; "))
}

fn kary_query_trend() -> Result<String, String> {
    let n = 4096;
    let ks = vec![2, 4, 8, 16];
    let mut spec = grid_spec(
        26,
        300,
        vec![DatasetSpec::UniformGrid { n, spacing: 1.0 }],
        StrategyKind::KaryIntervals,
        ks.clone(),
        Family::Exponential,
    );
    spec.verify_rounds = true;
    spec.keep_episodes = true;
    let result = run_experiment(&spec).map_err(|e| e.to_string())?;
    let means = result
        .cells
        .iter()
        .map(|c| cell_mean(c).map(|m| m.0))
        .collect::<Result<Vec<_>, _>>()?;
    let monotone = means.windows(2).all(|w| w[1] < w[0]);
    let xs: Vec<f64> = ks.iter().map(|&k| (n as f64).log2() / (k as f64).log2()).collect();
    let (a, b, r2) = common::linear_fit(&xs, &means);
    let mut checked = 0usize;
    let mut failures = Vec::new();
    for c in &result.cells {
        for ep in c.episode_results.as_ref().ok_or("no episodes kept")? {
            checked += ep.rounds_checked;
            failures.extend(
                ep.check_failures
                    .iter()
                    .map(|f| format!("k={} round {}: {}", c.k, f.round, f.detail)),
            );
        }
    }
    let beta = response_floor(1.0, 1.0);
    let shown: Vec<String> = means.iter().map(|m| format!("{m:.1}")).collect();
    let mut detail = format!(
        "means [{}], fit {a:.2}x + {b:.2} R^2 {r2:.4}, beta {beta:.4} held on {checked} rounds",
        shown.join(", ")
    );
    if let Some(first) = failures.first() {
        detail.push_str(&format!("; {} check failures, first: {first}", failures.len()));
    }
    ensure(monotone && r2 >= 0.9 && failures.is_empty() && checked > 0, detail)
}

fn mismatch_degrades_gracefully() -> Result<String, String> {
    let spec = grid_spec(
        27,
        1000,
        vec![DatasetSpec::UniformGrid { n: 1024, spacing: 1.0 }],
        StrategyKind::BinaryQuantile,
        vec![2],
        Family::Polynomial,
    );
    let result = mismatch_sweep(&spec, &[0.25, 0.5, 1.0, 2.0, 4.0]).map_err(|e| e.to_string())?;
    let stats = result.cells.iter().map(cell_mean).collect::<Result<Vec<_>, _>>()?;
    let (imin, &(min, se_min)) = stats
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .0.total_cmp(&b.1 .0))
        .expect("five cells");
    let itrue = result
        .cells
        .iter()
        .position(|c| c.theta_assumed == 1.0)
        .expect("truth in grid");
    let (at_truth, se_truth) = stats[itrue];
    let tol = (se_truth * se_truth + se_min * se_min).sqrt();
    let worst = stats.iter().map(|s| s.0).fold(0.0, f64::max);
    let shown: Vec<String> = result
        .cells
        .iter()
        .zip(&stats)
        .map(|(c, s)| format!("{}: {:.1}", c.theta_assumed, s.0))
        .collect();
    ensure(
        at_truth - min <= tol && worst <= 3.0 * min,
        format!(
            "means {{{}}}; truth {at_truth:.1} vs min {min:.1} at {} (tol {tol:.2}); max/min {:.2}",
            shown.join(", "),
            result.cells[imin].theta_assumed,
            worst / min
        ),
    )
}

fn ball_search_terminates() -> Result<String, String> {
    let mut spec = grid_spec(
        28,
        200,
        vec![DatasetSpec::RandomCube {
            n: 2000,
            dim: 2,
            norm: Norm::euclidean(),
            seed: 28,
        }],
        StrategyKind::DBall,
        vec![2],
        Family::Polynomial,
    );
    spec.verify_rounds = true;
    spec.keep_episodes = true;
    let result = run_experiment(&spec).map_err(|e| e.to_string())?;
    let cell = &result.cells[0];
    let eps = cell.episode_results.as_ref().ok_or("no episodes kept")?;
    let found = eps.iter().filter(|e| e.found).count();
    let checked: usize = eps.iter().map(|e| e.rounds_checked).sum();
    let failures: Vec<String> = eps
        .iter()
        .flat_map(|e| {
            e.check_failures
                .iter()
                .map(|f| format!("round {}: {}", f.round, f.detail))
        })
        .collect();
    let (mean, _) = cell_mean(cell)?;
    let mut detail = format!("{found}/200 found, mean {mean:.1} queries, separation held on {checked} rounds");
    if let Some(first) = failures.first() {
        detail.push_str(&format!("; {} failures, first: {first}", failures.len()));
    }
    ensure(found * 100 >= 99 * 200 && failures.is_empty() && checked > 0, detail)
}

fn experiment_determinism() -> Result<String, String> {
    let mut spec = ExperimentSpec::new(
        29,
        20,
        Grid {
            datasets: vec![
                DatasetSpec::UniformGrid { n: 200, spacing: 1.0 },
                DatasetSpec::RandomCube {
                    n: 150,
                    dim: 2,
                    norm: Norm::euclidean(),
                    seed: 3,
                },
            ],
            strategies: vec![
                StrategyKind::RandomBaseline,
                StrategyKind::BinaryQuantile,
                StrategyKind::DBall,
            ],
            k: vec![2],
            family: vec![Family::Polynomial, Family::Exponential],
            theta_true: vec![1.0],
            theta_assumed: Some(vec![0.5, 1.0]),
        },
    );
    spec.keep_episodes = true;
    spec.track_expected_gain = true;
    let run = |threads: usize| -> Result<String, String> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| e.to_string())?;
        pool.install(|| run_experiment(&spec))
            .and_then(|r| r.to_json())
            .map_err(|e| e.to_string())
    };
    let a = run(1)?;
    let b = run(4)?;
    let c = run(4)?;
    ensure(
        a == b && b == c,
        format!("{} bytes identical across 3 runs (1 and 4 threads)", a.len()),
    )
}

fn main() -> ExitCode {
    let checks: [(&str, Check); 12] = [
        ("posterior_matches_enumeration", posterior_matches_enumeration),
        ("expected_gain_identity", expected_gain_identity),
        ("divergence_mixture_inequality", divergence_mixture_inequality),
        ("quantile_mean_query_bound", quantile_mean_query_bound),
        ("quantile_gain_floor", quantile_gain_floor),
        ("quantile_log_scaling", quantile_log_scaling),
        ("adversarial_instance_properties", adversarial_instance_properties),
        ("adversarial_success_envelope", adversarial_success_envelope),
        ("kary_query_trend", kary_query_trend),
        ("mismatch_degrades_gracefully", mismatch_degrades_gracefully),
        ("ball_search_terminates", ball_search_terminates),
        ("experiment_determinism", experiment_determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, check) in checks {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = check();
        let took = fmt_secs(start.elapsed());
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail} [{took}]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail} [{took}]");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance check(s) failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}

fn fmt_secs(d: Duration) -> String {
    format!("{:.1}s", d.as_secs_f64())
}
