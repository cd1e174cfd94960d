//! `nbeats forecast`: run a trained ensemble over a dataset and write the
//! median-combined forecasts (optionally the per-vote forecasts too).

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;

use nbeats::data::load_dataset;
use nbeats::ensemble::{forecast_dataset, load_ensemble, median_combine};

#[derive(Args)]
pub struct ForecastArgs {
    /// Trained ensemble directory.
    #[arg(long)]
    pub ensemble: PathBuf,
    #[arg(long)]
    pub values: PathBuf,
    #[arg(long)]
    pub meta: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write one csv per member head under `members/`.
    #[arg(long)]
    pub per_member: bool,
}

pub fn run(args: ForecastArgs) -> Result<()> {
    let ensemble = load_ensemble(&args.ensemble).context("loading ensemble")?;
    // Full histories: forecast the steps after the last observation.
    let ds = load_dataset(&args.values, &args.meta).context("loading dataset")?;
    let fs = forecast_dataset(&ensemble, &ds)?;
    let combined = median_combine(&fs)?;
    std::fs::create_dir_all(&args.out)?;
    crate::io::write_forecasts(&combined, &args.out.join("forecasts.csv"))?;
    if args.per_member {
        super::write_member_forecasts(&fs, &args.out.join("members"))?;
    }
    println!(
        "wrote {} forecasts ({} votes) -> {}",
        combined.len(),
        fs.votes.len(),
        args.out.display()
    );
    Ok(())
}
