use std::fmt;
use std::str::FromStr;

use noisy_search::adversarial::{
    gen_adversarial_points, lower_bound_horizon, success_probability_bound, verify_response_bound, RATIO_TOL,
};
use noisy_search::feedback::subset_gain_bound;
use noisy_search::harness::{run_experiment, DatasetSpec, ExperimentSpec, Grid};
use noisy_search::{
    expected_info_gain, kl_divergence, marginal_response_probs, Dataset, Family, Norm, Posterior, Query, StrategyKind,
    UserModel,
};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

/// Tolerance of the gain identity.
pub const IDENTITY_TOL: f64 = 1e-9;
/// Allowed negative slack of the mixture inequality.
pub const MIXTURE_TOL: f64 = 1e-12;
/// Rounds covered by the success envelope.
pub const ENVELOPE_ROUNDS: usize = 6;
/// Query cap of envelope episodes.
pub const ENVELOPE_CAP: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Check {
    GainIdentity,
    MixtureDivergence,
    SimilarityCap,
    ResponseBound,
    SuccessEnvelope,
}

impl Check {
    pub const ALL: [Check; 5] = [
        Check::GainIdentity,
        Check::MixtureDivergence,
        Check::SimilarityCap,
        Check::ResponseBound,
        Check::SuccessEnvelope,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::GainIdentity => "gain-identity",
            Check::MixtureDivergence => "mixture-divergence",
            Check::SimilarityCap => "similarity-cap",
            Check::ResponseBound => "response-bound",
            Check::SuccessEnvelope => "success-envelope",
        }
    }

    /// Short alias accepted on the command line.
    pub fn alias(self) -> &'static str {
        match self {
            Check::GainIdentity => "lemma1",
            Check::MixtureDivergence => "lemma2",
            Check::SimilarityCap => "lemma6",
            Check::ResponseBound => "lemma7",
            Check::SuccessEnvelope => "lemma8",
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Check {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.to_ascii_lowercase().replace('_', "-");
        Check::ALL
            .into_iter()
            .find(|c| c.name() == key || c.alias() == key)
            .ok_or_else(|| {
                let names: Vec<String> = Check::ALL
                    .iter()
                    .map(|c| format!("{} ({})", c.name(), c.alias()))
                    .collect();
                format!("unknown check {s:?}; expected one of {}", names.join(", "))
            })
    }
}

#[derive(Debug, Clone)]
pub struct Params {
    pub n: Option<usize>,
    pub k: Option<usize>,
    pub theta: f64,
    pub trials: usize,
    pub episodes: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub check: &'static str,
    pub seed: u64,
    pub passed: bool,
    pub summary: String,
    pub detail: Value,
}

pub fn run(check: Check, p: &Params) -> Result<Report, String> {
    let (passed, summary, detail) = match check {
        Check::GainIdentity => gain_identity(p)?,
        Check::MixtureDivergence => mixture_divergence(p)?,
        Check::SimilarityCap => similarity_cap(p)?,
        Check::ResponseBound => response_bound(p)?,
        Check::SuccessEnvelope => success_envelope(p)?,
    };
    Ok(Report {
        check: check.name(),
        seed: p.seed,
        passed,
        summary,
        detail,
    })
}

type Outcome = Result<(bool, String, Value), String>;

fn err(e: impl ToString) -> String {
    e.to_string()
}

/// Expected gain against the entropy drop averaged over responses, and the
/// subset bound against the gain, on random small instances.
fn gain_identity(p: &Params) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut worst_identity: f64 = 0.0;
    let mut worst_subset = f64::NEG_INFINITY;
    for _ in 0..p.trials {
        let n = rng.random_range(3..=8);
        let k = rng.random_range(2..=(n - 1).min(4));
        let dim = rng.random_range(1..=2);
        let family = if rng.random_bool(0.5) {
            Family::Polynomial
        } else {
            Family::Exponential
        };
        let theta = rng.random_range(0.25..4.0);
        let data = Dataset::random_cube(n, dim, Norm::euclidean(), &mut rng).map_err(err)?;
        let mut q = sample(&mut rng, n, k).into_vec();
        q.sort_unstable();
        let mut w: Vec<f64> = (0..n)
            .map(|_| if rng.random_bool(0.2) { 0.0 } else { rng.random() })
            .collect();
        for &i in &q {
            w[i] = 0.0;
        }
        let free = (0..n).find(|i| !q.contains(i)).expect("k < n");
        w[free] += 1e-3;
        let prior = Posterior::from_weights(w).map_err(err)?;
        let model = UserModel::new(family, theta).map_err(err)?;
        let query = Query::new(q, n).map_err(err)?;
        let gain = expected_info_gain(&prior, &data, &model, &query);

        let marginal = marginal_response_probs(&data, &model, &query, &prior).map_err(err)?;
        let h0 = prior.entropy();
        let mut direct = 0.0;
        for (r, &a) in marginal.probs().iter().enumerate() {
            if a > 0.0 {
                let post = prior.update(&data, &model, &query, r).map_err(err)?;
                direct += a * (h0 - post.entropy());
            }
        }
        worst_identity = worst_identity.max((gain - direct).abs());

        let subset: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.5)).collect();
        worst_subset = worst_subset.max(subset_gain_bound(&prior, &data, &model, &query, &subset) - gain);
    }
    let passed = worst_identity <= IDENTITY_TOL && worst_subset <= IDENTITY_TOL;
    Ok((
        passed,
        format!(
            "max |gain - direct| {worst_identity:.3e}, max subset excess {worst_subset:.3e} over {} instances",
            p.trials
        ),
        json!({"trials": p.trials, "max_identity_error": worst_identity, "max_subset_excess": worst_subset, "tolerance": IDENTITY_TOL}),
    ))
}

fn random_distribution<R: Rng>(rng: &mut R, k: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| rng.random_range(1e-3..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

/// The weighted mixture minimizes the weighted divergence from a common
/// reference.
fn mixture_divergence(p: &Params) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut worst = f64::INFINITY;
    for _ in 0..p.trials {
        let k = rng.random_range(2..=8);
        let l = rng.random_range(1..=8);
        let alpha: Vec<f64> = (0..l).map(|_| rng.random_range(1e-3..1.0)).collect();
        let phis: Vec<Vec<f64>> = (0..l).map(|_| random_distribution(&mut rng, k)).collect();
        let r = random_distribution(&mut rng, k);
        let total: f64 = alpha.iter().sum();
        let bar: Vec<f64> = (0..k)
            .map(|j| alpha.iter().zip(&phis).map(|(a, phi)| a * phi[j]).sum::<f64>() / total)
            .collect();
        let mut lhs = 0.0;
        let mut rhs = 0.0;
        for (a, phi) in alpha.iter().zip(&phis) {
            lhs += a * kl_divergence(phi, &r).map_err(err)?;
            rhs += a * kl_divergence(phi, &bar).map_err(err)?;
        }
        worst = worst.min(lhs - rhs);
    }
    Ok((
        worst >= -MIXTURE_TOL,
        format!("min slack {worst:.3e} over {} triples", p.trials),
        json!({"trials": p.trials, "min_slack": worst, "tolerance": MIXTURE_TOL}),
    ))
}

fn similarity_cap(p: &Params) -> Outcome {
    let n = p.n.unwrap_or(64);
    let inst = gen_adversarial_points(n, p.theta, 0.0, 1.0).map_err(err)?;
    let recursion = inst.recursion_error();
    let cap = inst.check_similarity_cap();
    let ratio = match cap {
        Ok(r) | Err(r) => r,
    };
    let passed = recursion <= RATIO_TOL && cap.is_ok();
    Ok((
        passed,
        format!(
            "n = {n}, theta = {}: recursion error {recursion:.3e}, max similarity ratio {ratio:.6}",
            p.theta
        ),
        json!({"n": n, "theta": p.theta, "recursion_error": recursion, "max_similarity_ratio": ratio}),
    ))
}

fn response_bound(p: &Params) -> Outcome {
    let n = p.n.unwrap_or(10);
    let k = p.k.unwrap_or(3);
    let inst = gen_adversarial_points(n, p.theta, 0.0, 1.0).map_err(err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let report = verify_response_bound(&inst, k, &mut rng).map_err(err)?;
    let mode = if report.exhaustive { "exhaustive" } else { "sampled" };
    let mut summary = format!(
        "n = {n}, k = {k}, theta = {}: {mode}, {} pairs, max j*Pr/2 = {:.6}",
        p.theta, report.checked, report.max_ratio
    );
    if let Some(c) = &report.counterexample {
        summary.push_str(&format!(
            "; violated at query {:?}, target {}, position {} (Pr = {:.6})",
            c.query, c.target, c.position, c.probability
        ));
    }
    Ok((report.passed(), summary, serde_json::to_value(&report).map_err(err)?))
}

/// Empirical probability that the t-th query holds the target, against the
/// envelope plus three binomial standard errors, for several strategies.
fn success_envelope(p: &Params) -> Outcome {
    let n = p.n.unwrap_or(1024);
    let k = p.k.unwrap_or(4);
    let episodes = p.episodes;
    if episodes == 0 {
        return Err("episodes must be positive".into());
    }
    let horizon = lower_bound_horizon(n, k).map_err(err)?;
    let mut passed = true;
    let mut rows = Vec::new();
    let mut notes = Vec::new();
    // Two-point strategies run with k = 2; a smaller query only lowers the
    // success probability.
    for (strategy, qk) in [
        (StrategyKind::BinaryQuantile, 2),
        (StrategyKind::RandomBaseline, k),
        (StrategyKind::TopKFallback, k),
    ] {
        let grid = Grid {
            datasets: vec![DatasetSpec::Adversarial {
                n,
                theta: p.theta,
                x1: 0.0,
                x2: 1.0,
            }],
            strategies: vec![strategy],
            k: vec![qk],
            family: vec![Family::Polynomial],
            theta_true: vec![p.theta],
            theta_assumed: None,
        };
        let mut spec = ExperimentSpec::new(p.seed, episodes, grid);
        spec.max_queries = Some(ENVELOPE_CAP);
        spec.keep_episodes = true;
        let result = run_experiment(&spec).map_err(err)?;
        let cell = &result.cells[0];
        if let Some(e) = &cell.error {
            return Err(format!("{strategy}: {e}"));
        }
        let eps = cell.episode_results.as_deref().unwrap_or_default();
        let mut worst_excess = f64::NEG_INFINITY;
        for t in 1..=ENVELOPE_ROUNDS {
            let hits = eps.iter().filter(|e| e.found && e.queries == t).count();
            let freq = hits as f64 / episodes as f64;
            let bound = success_probability_bound(n, k, t);
            let sigma = (bound * (1.0 - bound) / episodes as f64).sqrt();
            let ok = freq <= bound + 3.0 * sigma;
            passed &= ok;
            worst_excess = worst_excess.max(freq - bound - 3.0 * sigma);
            rows.push(json!({"strategy": strategy, "k": qk, "t": t, "frequency": freq, "bound": bound, "sigma": sigma, "ok": ok}));
        }
        let mean = cell.queries.as_ref().map_or(f64::NAN, |q| q.mean);
        notes.push(format!("{strategy}: mean {mean:.1}, worst excess {worst_excess:.4}"));
    }
    Ok((
        passed,
        format!("n = {n}, k = {k}, {episodes} episodes; {}", notes.join("; ")),
        json!({"n": n, "k": k, "theta": p.theta, "episodes": episodes, "expected_queries_lower": horizon.expected_queries, "rounds": rows}),
    ))
}
