//! `fpp`: sample Poisson environments, solve for action minimizers, weigh
//! greedy lattice animals and run Monte Carlo experiments.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 hard invariant
//! violation during an experiment, 130 interrupted by Ctrl-C.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use config::FieldFamily;
use error::CliError;
use fpp_core::RunControl;

#[derive(Parser)]
#[command(
    name = "fpp",
    version,
    about = "First passage percolation on Poisson points: action minimizers and experiments"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
pub struct Common {
    /// JSON configuration for the subcommand (unknown fields are rejected).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; required here or as `seed` / `master_seed` in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for experiments (0 = all cores).
    #[arg(long, global = true, env = "FPP_WORKERS", default_value_t = 0)]
    workers: usize,
    /// Output file (sample, geodesic, animal; stdout when omitted) or
    /// directory (experiment; defaults to the current directory).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a Poisson environment and write its JSON document.
    Sample(SampleArgs),
    /// Minimize the action from the start point to a target.
    Geodesic(GeodesicArgs),
    /// Heaviest lattice animal through the origin on a random or given field.
    Animal(AnimalArgs),
    /// Run an experiment spec; writes <id>_records.csv and <id>_aggregates.json.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
pub struct SampleArgs {
    /// Use the corridor window around [0, t].
    #[arg(long)]
    t: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    /// Odd box side K widening the corridor.
    #[arg(long)]
    k: Option<i64>,
    #[arg(long)]
    intensity: Option<f64>,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
pub struct GeodesicArgs {
    /// Horizon: speed budget s = c·t; default target is the line x = t.
    #[arg(long)]
    t: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    k: Option<i64>,
    #[arg(long)]
    intensity: Option<f64>,
    /// Environment document written by `fpp sample`.
    #[arg(long)]
    environment: Option<PathBuf>,
    /// Require the exhaustive solver (fails on oversized instances).
    #[arg(long)]
    exact: bool,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
pub struct AnimalArgs {
    /// Animal size.
    #[arg(long)]
    n: Option<usize>,
    /// Odd box side K; a Poisson field without --parameter uses λ = K².
    #[arg(long)]
    k: Option<i64>,
    #[arg(long, value_enum)]
    family: Option<FieldFamily>,
    /// λ (Poisson) or ε (Bernoulli).
    #[arg(long)]
    parameter: Option<f64>,
    /// Cell-value file `[{i, j, value}, ...]` instead of a sampled field.
    #[arg(long)]
    grid: Option<PathBuf>,
    /// Exhaustive enumeration (default when n is small enough).
    #[arg(long)]
    exact: bool,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
pub struct ExperimentArgs {
    /// moments, xi, variance_diff, locality or animal_tail.
    #[arg(long)]
    kind: Option<String>,
    #[arg(long)]
    id: Option<String>,
    /// Horizon grid, comma separated or repeated.
    #[arg(long, value_delimiter = ',')]
    t: Vec<f64>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    gamma_prime: Option<f64>,
    #[arg(long)]
    replicas: Option<u64>,
    /// Box side K.
    #[arg(long)]
    k: Option<i64>,
    #[arg(long)]
    intensity: Option<f64>,
    /// Force the exhaustive solver for every geodesic.
    #[arg(long)]
    exact: bool,
    /// Stop after this many seconds, keeping completed batches.
    #[arg(long)]
    time_limit: Option<f64>,
}

impl clap::ValueEnum for FieldFamily {
    fn value_variants<'a>() -> &'a [Self] {
        &[FieldFamily::Poisson, FieldFamily::Bernoulli]
    }

    fn to_possible_value(&self) -> Option<clap::builder::PossibleValue> {
        Some(clap::builder::PossibleValue::new(match self {
            FieldFamily::Poisson => "poisson",
            FieldFamily::Bernoulli => "bernoulli",
        }))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let control = RunControl::with_workers(cli.common.workers);
    let cancel = control.cancel.clone();
    let interrupted = Arc::new(AtomicBool::new(false));
    let flag = interrupted.clone();
    if let Err(e) = ctrlc::set_handler(move || {
        flag.store(true, Ordering::SeqCst);
        cancel.store(true, Ordering::SeqCst);
    }) {
        eprintln!("warning: could not install the Ctrl-C handler: {e}");
    }
    let result = match &cli.command {
        Command::Sample(args) => commands::sample(&cli.common, args),
        Command::Geodesic(args) => commands::geodesic(&cli.common, args),
        Command::Animal(args) => commands::animal(&cli.common, args),
        Command::Experiment(args) => commands::experiment(&cli.common, args, control, &interrupted),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report(&e),
    }
}

fn report(e: &CliError) -> ExitCode {
    eprintln!("error: {e}");
    if let Some(help) = e.guidance() {
        eprintln!("hint: {help}");
    }
    ExitCode::from(e.exit_code())
}
