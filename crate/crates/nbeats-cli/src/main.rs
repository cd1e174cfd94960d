//! `nbeats` — train, forecast, evaluate, apply (zero-shot) and inspect
//! parallel multi-head basis-expansion forecasting ensembles.

mod commands;
mod config;
mod io;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "nbeats", version, about = "Parallel multi-head N-BEATS forecasting")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train an ensemble per the run config and write it to a directory.
    Train(commands::train::TrainArgs),
    /// Forecast a dataset with a trained ensemble.
    Forecast(commands::forecast::ForecastArgs),
    /// Evaluate a forecast file against a dataset's held-out horizon.
    Evaluate(commands::evaluate::EvaluateArgs),
    /// Apply a trained ensemble to an unseen dataset (zero-shot regimes).
    Apply(commands::apply::ApplyArgs),
    /// Report parameter counts for a preset or a trained ensemble.
    Params(commands::params::ParamsArgs),
}

fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Train(args) => commands::train::run(args),
        Command::Forecast(args) => commands::forecast::run(args),
        Command::Evaluate(args) => commands::evaluate::run(args),
        Command::Apply(args) => commands::apply::run(args),
        Command::Params(args) => commands::params::run(args),
    }
}
