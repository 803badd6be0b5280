mod demo;
mod output;
mod verify;

use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use noisy_search::adversarial::gen_adversarial_points;
use noisy_search::analysis::{
    adversarial_lower_bound, ball_search_scale, gain_floor, interval_gain_floor, kary_trend, quantile_search_bound,
    response_floor, BoundReport,
};
use noisy_search::harness::{run_experiment, DatasetSpec, ExperimentSpec};
use noisy_search::{Family, StrategyKind};
use noisy_search_service::CreateRequest;
use serde_json::json;

use crate::output::emit;
use crate::verify::Check;

/// Seed used when --seed is not given.
const DEFAULT_SEED: u64 = 20_251_018;
/// Caps the worker threads of experiment runs.
const THREADS_ENV: &str = "NOISY_SEARCH_THREADS";

#[derive(Debug, Parser)]
#[command(name = "noisy-search", version, about = "Noisy search under comparative feedback")]
struct Cli {
    /// Seed for all randomness.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overwrite existing output files.
    #[arg(long, global = true)]
    force: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run an experiment spec (JSON) and write the result.
    Run {
        spec: PathBuf,
        /// Result JSON; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-cell summary CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Run a numerical check: gain-identity, mixture-divergence,
    /// similarity-cap, response-bound or success-envelope.
    Verify {
        check: Check,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, default_value_t = 1.0)]
        theta: f64,
        /// Random instances for gain-identity and mixture-divergence.
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        /// Episodes per strategy for success-envelope.
        #[arg(long, default_value_t = 2000)]
        episodes: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate the adversarial point set as JSON.
    GenAdversarial {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        theta: f64,
        #[arg(long, default_value_t = 0.0)]
        x1: f64,
        #[arg(long, default_value_t = 1.0)]
        x2: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the closed-form constants and query bounds.
    Bounds {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, default_value_t = 1.0)]
        theta: f64,
        /// Smallest gap between points, for the exponential response floor.
        #[arg(long)]
        delta0: Option<f64>,
        /// Dimension, for the ball-search scale.
        #[arg(long)]
        dim: Option<usize>,
        /// Print JSON instead of text.
        #[arg(long)]
        json: bool,
    },
    /// Start the HTTP session service.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
        /// Default dataset for sessions that do not name one, as JSON
        /// (e.g. '{"kind": "uniform_grid", "n": 64}') or a path to a JSON file.
        #[arg(long)]
        dataset: Option<String>,
    },
    /// Interactive search in the terminal.
    Demo {
        /// Dataset as JSON or a path to a JSON file; a grid of --n points when absent.
        #[arg(long)]
        dataset: Option<String>,
        #[arg(long, default_value_t = 32)]
        n: usize,
        #[arg(long, default_value = "binary_quantile")]
        strategy: StrategyKind,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, default_value = "polynomial", value_parser = parse_family)]
        family: Family,
        #[arg(long, default_value_t = 1.0)]
        theta: f64,
    },
}

fn parse_family(s: &str) -> Result<Family, String> {
    match s.to_ascii_lowercase().as_str() {
        "polynomial" | "poly" => Ok(Family::Polynomial),
        "exponential" | "exp" => Ok(Family::Exponential),
        _ => Err(format!("unknown family {s:?}; expected polynomial or exponential")),
    }
}

fn parse_dataset(arg: &str) -> Result<DatasetSpec, String> {
    let text = if Path::new(arg).is_file() {
        std::fs::read_to_string(arg).map_err(|e| format!("{arg}: {e}"))?
    } else {
        arg.to_string()
    };
    serde_json::from_str(&text).map_err(|e| format!("dataset: {e}"))
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String, String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| e.to_string())?;
    s.push('\n');
    Ok(s)
}

fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = raw
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| format!("{THREADS_ENV} must be a positive integer, got {raw:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| e.to_string())
}

/// How a command ended when it did not fail outright.
enum Outcome {
    Ok,
    CheckFailed,
}

fn bounds_text(
    n: usize,
    k: Option<usize>,
    theta: f64,
    delta0: Option<f64>,
    dim: Option<usize>,
    as_json: bool,
) -> Result<String, String> {
    let floor = gain_floor(theta);
    let mut reports: Vec<BoundReport> = vec![quantile_search_bound(n, theta)];
    let mut extra = Vec::new();
    let beta = delta0.map(|d| response_floor(theta, d));
    if let Some(b) = beta {
        extra.push(("beta", b));
    }
    if let Some(k) = k {
        reports.push(kary_trend(n, k));
        if let Some(b) = beta {
            extra.push(("interval_gain_floor", interval_gain_floor(b, k)));
        }
        if let Ok(r) = adversarial_lower_bound(n, k) {
            reports.push(r);
        }
    }
    if let Some(d) = dim {
        reports.push(ball_search_scale(n, d));
    }
    if as_json {
        let extras: serde_json::Map<String, serde_json::Value> =
            extra.iter().map(|(name, v)| (name.to_string(), json!(v))).collect();
        return to_json(&json!({
            "rho": floor.rho,
            "phi": floor.phi,
            "gain_floor": floor.gain,
            "constants": extras,
            "bounds": reports,
        }));
    }
    let mut s = format!(
        "rho = {:.6}\nphi = {:.6}\ngain_floor = {:.7} bits\n",
        floor.rho, floor.phi, floor.gain
    );
    for (name, v) in extra {
        s.push_str(&format!("{name} = {v:.6}\n"));
    }
    for r in reports {
        s.push_str(&format!("{r}\n"));
    }
    Ok(s)
}

fn execute(cli: Cli) -> Result<Outcome, String> {
    let seed = cli.seed.unwrap_or(DEFAULT_SEED);
    match cli.command {
        Command::Run { spec, out, csv } => {
            configure_threads()?;
            let mut spec = ExperimentSpec::load(&spec).map_err(|e| format!("{}: {e}", spec.display()))?;
            if let Some(s) = cli.seed {
                spec.master_seed = s;
            }
            log::info!("master seed {}", spec.master_seed);
            eprintln!("seed: {}", spec.master_seed);
            let result = run_experiment(&spec).map_err(|e| e.to_string())?;
            if let Some(path) = csv {
                let mut buf = Vec::new();
                result.write_csv(&mut buf).map_err(|e| e.to_string())?;
                emit(
                    Some(&path),
                    &String::from_utf8(buf).map_err(|e| e.to_string())?,
                    cli.force,
                )?;
            }
            emit(out.as_deref(), &result.to_json().map_err(|e| e.to_string())?, cli.force)?;
            Ok(Outcome::Ok)
        }
        Command::Verify {
            check,
            n,
            k,
            theta,
            trials,
            episodes,
            out,
        } => {
            configure_threads()?;
            eprintln!("seed: {seed}");
            let params = verify::Params {
                n,
                k,
                theta,
                trials,
                episodes,
                seed,
            };
            let report = verify::run(check, &params)?;
            eprintln!(
                "{} {}: {}",
                if report.passed { "PASS" } else { "FAIL" },
                report.check,
                report.summary
            );
            emit(out.as_deref(), &to_json(&report)?, cli.force)?;
            Ok(if report.passed {
                Outcome::Ok
            } else {
                Outcome::CheckFailed
            })
        }
        Command::GenAdversarial { n, theta, x1, x2, out } => {
            let inst = gen_adversarial_points(n, theta, x1, x2).map_err(|e| e.to_string())?;
            emit(out.as_deref(), &inst.to_json().map_err(|e| e.to_string())?, cli.force)?;
            Ok(Outcome::Ok)
        }
        Command::Bounds {
            n,
            k,
            theta,
            delta0,
            dim,
            json,
        } => {
            if n < 2 || !(theta > 0.0 && theta.is_finite()) {
                return Err("need n >= 2 and a positive theta".into());
            }
            print!("{}", bounds_text(n, k, theta, delta0, dim, json)?);
            Ok(Outcome::Ok)
        }
        Command::Serve { port, host, dataset } => {
            let dataset = dataset.as_deref().map(parse_dataset).transpose()?;
            let runtime = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
            runtime
                .block_on(noisy_search_service::serve(
                    SocketAddr::new(host, port),
                    dataset,
                    async {
                        let _ = tokio::signal::ctrl_c().await;
                    },
                ))
                .map_err(|e| e.to_string())?;
            Ok(Outcome::Ok)
        }
        Command::Demo {
            dataset,
            n,
            strategy,
            k,
            family,
            theta,
        } => {
            let dataset = match dataset {
                Some(d) => parse_dataset(&d)?,
                None => DatasetSpec::UniformGrid { n, spacing: 1.0 },
            };
            eprintln!("seed: {seed}");
            let req = CreateRequest {
                dataset: Some(dataset),
                strategy,
                k,
                family,
                theta,
                seed,
                max_rounds: None,
            };
            demo::run(req, std::io::stdin().lock(), std::io::stdout().lock())?;
            Ok(Outcome::Ok)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match execute(cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::CheckFailed) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounds_text_lists_constants() {
        let text = bounds_text(1024, Some(4), 1.0, Some(1.0), Some(2), false).unwrap();
        assert!(text.starts_with("rho = 0.666667\nphi = 0.583333\ngain_floor = 0.0103604 bits\n"));
        assert!(text.contains("beta = 0.404"));
        assert!(text.contains("quantile_search_upper"));
        assert!(text.contains("kary_trend = 5.000000"));
        assert!(text.contains("adversarial_lower"));
        assert!(text.contains("ball_search_scale"));
        let v: serde_json::Value =
            serde_json::from_str(&bounds_text(1024, None, 1.0, None, None, true).unwrap()).unwrap();
        assert_eq!(v["bounds"].as_array().unwrap().len(), 1);
    }

    #[test]
    fn families_parse() {
        assert_eq!(parse_family("EXP").unwrap(), Family::Exponential);
        assert!(parse_family("gauss").is_err());
    }

    #[test]
    fn inline_dataset_parses() {
        let d = parse_dataset(r#"{"kind": "uniform_grid", "n": 8}"#).unwrap();
        assert_eq!(d, DatasetSpec::UniformGrid { n: 8, spacing: 1.0 });
        assert!(parse_dataset("{").is_err());
    }
}
