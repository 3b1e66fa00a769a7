//! `harbor`: reproducible workflows over the port simulation core.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage error.

mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use harbor_core::eta::RIDGE_ID;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(anyhow::Error),
}

impl CliError {
    pub fn runtime(e: impl std::fmt::Display) -> Self {
        CliError::Runtime(anyhow::anyhow!("{e}"))
    }
}

impl<E: std::error::Error + Send + Sync + 'static> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError::Runtime(e.into())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    Without,
    With,
}

#[derive(Debug, Parser)]
#[command(name = "harbor", version, about = "Port traffic, ETA, berth planning and crane throughput simulation")]
pub struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Root seed; overrides the `seed` key of the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Format of the main table.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthetic AIS traffic, voyages and weather (needs --config).
    Generate,
    /// Fit an ETA predictor on generated data.
    Fit {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value = RIDGE_ID)]
        predictor: String,
    },
    /// Score the kinematic baseline, and optionally a fitted model, on generated data.
    Eval {
        #[arg(long)]
        data: PathBuf,
        /// model.json written by `fit`.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Score this predictor id; must match the model when one is given.
        #[arg(long)]
        predictor: Option<String>,
    },
    /// Berth plans.
    #[command(subcommand)]
    Plan(PlanCommand),
    /// One simulation run.
    Simulate {
        #[arg(long)]
        rate: Option<f64>,
        #[arg(long, value_enum)]
        strategy: Option<StrategyArg>,
    },
    /// Throughput over delay rates for both strategies.
    Sweep {
        /// Percent; `a..b:step` or a comma list.
        #[arg(long, default_value = "5..30:5")]
        rates: String,
        #[arg(long, default_value_t = 30)]
        seeds: usize,
    },
    /// Grid search of handling time and arrival density against the endpoint throughputs.
    Calibrate {
        #[arg(long, default_value_t = 10)]
        seeds: usize,
    },
    /// Summary tables.
    #[command(subcommand)]
    Report(ReportCommand),
}

#[derive(Debug, Subcommand)]
pub enum PlanCommand {
    /// Initial plan for the configured schedule, or for generated voyages.
    Build {
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Check a plan; exits 1 when it has violations.
    Validate {
        #[arg(long)]
        plan: PathBuf,
    },
    /// Move one vessel to a new ETA.
    Replan {
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        vessel: String,
        /// RFC 3339 instant.
        #[arg(long)]
        eta: String,
        #[arg(long)]
        now: String,
    },
}

#[derive(Debug, Subcommand)]
pub enum ReportCommand {
    /// Extra annual revenue per crane count.
    Revenue {
        #[arg(long)]
        without: f64,
        #[arg(long = "with")]
        with_prediction: f64,
        #[arg(long, default_value_t = 15)]
        cranes: u32,
        #[arg(long, default_value_t = 70.0)]
        value_per_van: f64,
        #[arg(long, default_value_t = 24.0)]
        hours_per_day: f64,
        #[arg(long, default_value_t = 365.0)]
        days_per_year: f64,
    },
    /// Arrival deviation of delayed vessels under both strategies.
    Punctuality {
        #[arg(long, default_value_t = 0.3)]
        rate: f64,
        #[arg(long, default_value_t = 30)]
        seeds: usize,
    },
    /// Anchorage waiting per vessel under both strategies, with an SVG chart.
    Waiting {
        #[arg(long, default_value_t = 0.3)]
        rate: f64,
        #[arg(long, default_value_t = 1)]
        seeds: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}\n\nFor more information, try 'harbor --help'.");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
