//! `nbeats apply`: zero-shot application of a trained ensemble to a target
//! dataset. The target's last horizon is held out, forecasts are produced
//! from the remaining history per the regime, and the report scores them.

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;

use nbeats::ensemble::{load_ensemble, median_combine, zero_shot_apply};
use nbeats::metrics::evaluate_forecasts;

use crate::config::parse_regime;

#[derive(Args)]
pub struct ApplyArgs {
    /// Trained (source) ensemble directory.
    #[arg(long)]
    pub ensemble: PathBuf,
    /// Target dataset values (full series; the last horizon is evaluated).
    #[arg(long)]
    pub values: PathBuf,
    #[arg(long)]
    pub meta: PathBuf,
    /// Zero-shot regime: r-o adapts horizons, r-sh / r-sh-lt require the
    /// members to be trained at the target horizon already.
    #[arg(long, default_value = "r-o")]
    pub regime: String,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write one csv per member head under `members/`.
    #[arg(long)]
    pub per_member: bool,
    #[arg(long, default_value_t = 1.0)]
    pub tau: f64,
}

pub fn run(args: ApplyArgs) -> Result<()> {
    let regime = parse_regime(&args.regime)?;
    let ensemble = load_ensemble(&args.ensemble).context("loading ensemble")?;
    let ds = super::load_split_dataset(&args.values, &args.meta)?;
    let fs = zero_shot_apply(&ensemble, &ds, regime).context("zero-shot application")?;
    let combined = median_combine(&fs)?;

    std::fs::create_dir_all(&args.out)?;
    crate::io::write_forecasts(&combined, &args.out.join("forecasts.csv"))?;
    if args.per_member {
        super::write_member_forecasts(&fs, &args.out.join("members"))?;
    }

    let report = evaluate_forecasts(&ds, &combined, args.tau).context("evaluating")?;
    std::fs::write(args.out.join("report.json"), report.to_json()?)?;
    std::fs::write(args.out.join("report.csv"), report.splits_csv())?;
    std::fs::write(args.out.join("per_series.csv"), report.per_series_csv())?;

    println!(
        "{} zero-shot: OWA {:.4}  SMAPE {:.3}  MASE {:.3}  MDA {:.3}  ({} series)",
        regime.name(),
        report.average.owa,
        report.average.smape,
        report.average.mase,
        report.average.mda,
        report.average.count
    );
    Ok(())
}
