use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bcglpm::config::{Mode, Settings};
use bcglpm::formats::{fmt_f64, read_edges, read_latent, read_panel, read_truth, write_json};
use bcglpm::pipeline::{emit_outputs, fit_parallel, rolling_fit, write_instance, WindowPlan};
use bcglpm::prices::{ingest_prices, realized_volatility, split_market};
use bcglpm::{AppError, Result};
use bcglpm_core::dgp::{benchmark_grid, generate, DgpSpec};
use bcglpm_core::metrics::{procrustes, procrustes_series, recovery_metrics};
use bcglpm_core::rng::DEFAULT_SEED;
use bcglpm_core::{LagMode, TimeSeriesPanel};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

/// Joint covariance-graph and latent-position network estimation.
///
/// Verbosity is read from BCGLPM_LOG (error, warn, info, debug, trace).
#[derive(Parser)]
#[command(name = "bcglpm", version)]
struct Cli {
    /// TOML or JSON settings; its values override the corresponding flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Setup {
    Lag0,
    Lag1,
}

#[derive(Subcommand)]
enum Command {
    /// Generate planted-graph benchmark instances.
    Simulate {
        #[arg(long, value_delimiter = ',', default_value = "50")]
        n: Vec<usize>,
        /// T as a multiple of n.
        #[arg(long, value_delimiter = ',', default_value = "2,10")]
        t_mult: Vec<usize>,
        #[arg(long, value_enum, value_delimiter = ',', default_value = "lag0,lag1")]
        setup: Vec<Setup>,
        #[arg(long, default_value_t = 10)]
        reps: usize,
        #[arg(long, default_value_t = 0.2)]
        edge_prob: f64,
        /// Leading lag-1 rows generated and dropped.
        #[arg(long, default_value_t = 0)]
        discard: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit one panel.
    Fit {
        #[arg(long)]
        input: PathBuf,
        /// Treat the input as price levels and fit realized volatilities.
        #[arg(long)]
        prices: bool,
        #[arg(long)]
        no_log_rv: bool,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        settings: Settings,
    },
    /// Fit rolling windows of realized volatility computed from prices.
    Rolling {
        #[arg(long)]
        input: PathBuf,
        /// Treat the input as an already transformed numeric panel.
        #[arg(long)]
        panel: bool,
        #[arg(long)]
        no_log_rv: bool,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        settings: Settings,
    },
    /// Score estimated edge probabilities against a planted graph.
    Evaluate {
        #[arg(long)]
        edges: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Procrustes fit of one latent configuration onto another, or distances
    /// along a sequence.
    Procrustes {
        #[arg(long, requires = "source", conflicts_with = "series")]
        target: Option<PathBuf>,
        #[arg(long)]
        source: Option<PathBuf>,
        #[arg(long, num_args = 2..)]
        series: Vec<PathBuf>,
    },
}

fn with_file(flags: Settings, config: Option<&Path>) -> Result<Settings> {
    match config {
        Some(p) => Ok(flags.overlay(Settings::load(p)?)),
        None => Ok(flags),
    }
}

fn load_input(input: &Path, prices: bool, log_rv: bool, market: &[String]) -> Result<TimeSeriesPanel> {
    if prices {
        realized_volatility(&ingest_prices(input)?, log_rv)?.into_panel(market)
    } else {
        split_market(&read_panel(input)?, market)
    }
}

fn print_json(v: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(v).unwrap_or_default());
}

fn run(cli: Cli) -> Result<()> {
    let config = cli.config.as_deref();
    match cli.command {
        Command::Simulate { n, t_mult, setup, reps, edge_prob, discard, seed, out } => {
            let file = with_file(Settings { seed, ..Settings::default() }, config)?;
            let seed = file.seed.unwrap_or(DEFAULT_SEED);
            let setups: Vec<LagMode> = setup
                .iter()
                .map(|s| match s {
                    Setup::Lag0 => LagMode::Lag0,
                    Setup::Lag1 => LagMode::Lag1,
                })
                .collect();
            let mut entries = Vec::new();
            for (k, spec) in benchmark_grid(&n, &t_mult, &setups, reps, seed).into_iter().enumerate() {
                let spec = DgpSpec { edge_prob, discard, ..spec };
                let inst = generate(&spec)?;
                let name = format!("instance_{k:04}");
                write_instance(&out.join(&name), &inst)?;
                entries.push(json!({
                    "id": k,
                    "path": name,
                    "n": spec.n,
                    "t": spec.t,
                    "setup": format!("{:?}", spec.setup).to_lowercase(),
                    "seed": spec.seed,
                }));
            }
            write_json(&out.join("manifest.json"), &json!({ "seed": seed, "instances": entries }))?;
            log::info!("wrote {} instances to {}", entries.len(), out.display());
        }
        Command::Fit { input, prices, no_log_rv, out, mut settings } => {
            if no_log_rv {
                settings.log_rv = Some(false);
            }
            let run = with_file(settings, config)?.resolve(Mode::Bcglpm1)?;
            let panel = load_input(&input, prices, run.log_rv, &run.market)?;
            log::info!("fitting {} series over {} rows, mode {:?}", panel.n_series(), panel.len(), run.mode);
            let result = fit_parallel(&panel, &run.fit)?;
            emit_outputs(&out, &result, &run, panel.labels())?;
        }
        Command::Rolling { input, panel, no_log_rv, out, mut settings } => {
            if no_log_rv {
                settings.log_rv = Some(false);
            }
            let run = with_file(settings, config)?.resolve(Mode::Bcglpm1)?;
            let data = load_input(&input, !panel, run.log_rv, &run.market)?;
            let plan = WindowPlan::new(data.len(), run.window_len, run.step)?;
            log::info!("{} windows of {} rows", plan.len(), plan.window_len);
            rolling_fit(&data, &plan, &run, &out)?;
        }
        Command::Evaluate { edges, truth, out } => {
            let r = recovery_metrics(&read_edges(&edges)?, &read_truth(&truth)?)?;
            let v = json!({"tp": r.tp, "fp": r.fp, "tn": r.tn, "fn": r.fn_, "acc": r.acc, "auc": r.auc});
            print_json(&v);
            if let Some(p) = out {
                write_json(&p, &v)?;
            }
        }
        Command::Procrustes { target, source, series } => match (target, source) {
            (Some(t), Some(s)) => {
                let r = procrustes(&read_latent(&t)?, &read_latent(&s)?)?;
                print_json(&json!({
                    "rho": r.rho,
                    "h": [[r.h[(0, 0)], r.h[(0, 1)]], [r.h[(1, 0)], r.h[(1, 1)]]],
                    "c": [r.c[0], r.c[1]],
                    "d": r.d,
                }));
            }
            _ if series.len() >= 2 => {
                let us = series.iter().map(|p| read_latent(p)).collect::<Result<Vec<_>>>()?;
                println!("step,d");
                for (k, d) in procrustes_series(&us)?.iter().enumerate() {
                    println!("{},{}", k + 1, fmt_f64(*d));
                }
            }
            _ => return Err(AppError::Config("give --target and --source, or --series with two or more files".into())),
        },
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("BCGLPM_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
