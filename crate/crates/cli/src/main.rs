//! `dayahead` command-line front end.

mod commands;
mod config;
mod manifest;
mod stats;
mod table;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use dayahead_core::dataset::{Scenario, ScenarioConfig};
use dayahead_core::models::ArchType;
use dayahead_core::Error as CoreError;

use commands::{Ctx, InputError};
use config::RunConfig;

#[derive(Parser, Debug)]
#[command(name = "dayahead", version, about = "Day-ahead electricity price forecasting")]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    /// rnn, kf, lem, lem-rnn, kf-rnn or lem-kf-rnn.
    #[arg(long, global = true)]
    arch: Option<ArchType>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic hourly panel.
    Synth {
        #[arg(long, default_value = "mixed", value_parser = parse_scenario)]
        scenario: Scenario,
        #[arg(long)]
        days: Option<usize>,
        /// TOML scenario parameters; flags override it.
        #[arg(long)]
        scenario_config: Option<PathBuf>,
    },
    /// Validate an hourly CSV and write the daily-matrix cache.
    Prepare {
        #[arg(long)]
        data: PathBuf,
    },
    /// Hyperparameter search on the validation range.
    Tune {
        /// Prepared cache from `prepare`.
        #[arg(long)]
        data: PathBuf,
        /// Worker threads; defaults to the number of cores.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Rolling out-of-sample forecasts over the test range.
    Backtest {
        #[arg(long)]
        data: PathBuf,
        /// Hyperparameters from `tune`; the config's `[params]` otherwise.
        #[arg(long)]
        params: Option<PathBuf>,
    },
    /// Metrics, rMAE against the weekly naive forecast and GW p-values.
    Evaluate {
        #[arg(long)]
        data: PathBuf,
        /// Forecast CSVs as `name=path` or `path`.
        #[arg(long = "forecasts", num_args = 1.., required = true)]
        forecasts: Vec<String>,
    },
    /// Daily and hour-of-day averages of the branch components.
    Decompose {
        #[arg(long)]
        forecasts: PathBuf,
    },
}

fn parse_scenario(s: &str) -> std::result::Result<Scenario, String> {
    Ok(match s {
        "flat" => Scenario::Flat,
        "linear" => Scenario::Linear,
        "nonlinear" => Scenario::Nonlinear,
        "mixed" => Scenario::Mixed,
        "realistic" => Scenario::Realistic,
        _ => return Err(format!("unknown scenario `{s}`")),
    })
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(a) = cli.arch {
        cfg.arch = a;
    }
    std::fs::create_dir_all(&cli.out_dir)
        .with_context(|| format!("creating {}", cli.out_dir.display()))?;
    let ctx = Ctx {
        cfg,
        out_dir: cli.out_dir,
    };
    match cli.command {
        Command::Synth {
            scenario,
            days,
            scenario_config,
        } => {
            let mut sc = match scenario_config {
                Some(p) => ScenarioConfig::load(p)?,
                None => ScenarioConfig::new(scenario, ctx.cfg.seed, 430),
            };
            sc.scenario = scenario;
            if let Some(d) = days {
                sc.days = d;
            }
            if cli.seed.is_some() {
                sc.seed = ctx.cfg.seed;
            }
            commands::synth(&ctx, sc)
        }
        Command::Prepare { data } => commands::prepare_cmd(&ctx, &data),
        Command::Tune { data, workers } => commands::tune(&ctx, &data, workers),
        Command::Backtest { data, params } => commands::backtest(&ctx, &data, params.as_deref()),
        Command::Evaluate { data, forecasts } => {
            commands::evaluate_cmd(&ctx, &data, &forecasts).map(|_| ())
        }
        Command::Decompose { forecasts } => commands::decompose_cmd(&ctx, &forecasts),
    }
}

/// 2 data validation, 3 insufficient history, 4 tuning failure,
/// 5 internal invariant violation, 1 anything else.
fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<InputError>().is_some() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<CoreError>() {
            return match e {
                CoreError::Parse { .. } | CoreError::Gap { .. } | CoreError::DegenerateColumn { .. } => 2,
                CoreError::InsufficientHistory(_) => 3,
                CoreError::AllTrialsFailed(_) | CoreError::TrialFailed { .. } => 4,
                CoreError::ShapeMismatch { .. }
                | CoreError::SingularDesign { .. }
                | CoreError::NonFiniteGradient(_)
                | CoreError::MissingInput { .. } => 5,
                _ => 1,
            };
        }
    }
    1
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
