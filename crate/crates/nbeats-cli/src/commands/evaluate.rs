//! `nbeats evaluate`: score a forecast file against the held-out horizon of
//! a dataset; writes the metric report as csv and json plus per-series
//! metrics for coverage plots.

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;

use nbeats::metrics::{evaluate_forecasts, member_residual_correlation};

#[derive(Args)]
pub struct EvaluateArgs {
    /// Forecast csv (`id,h1..hH`).
    #[arg(long)]
    pub forecasts: PathBuf,
    /// Values csv holding the full series including the evaluation horizon.
    #[arg(long)]
    pub values: PathBuf,
    #[arg(long)]
    pub meta: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Directory of per-member forecast csvs; enables the pairwise error
    /// correlation summary.
    #[arg(long)]
    pub members: Option<PathBuf>,
    /// Coverage threshold on per-series MASE.
    #[arg(long, default_value_t = 1.0)]
    pub tau: f64,
}

pub fn run(args: EvaluateArgs) -> Result<()> {
    let ds = super::load_split_dataset(&args.values, &args.meta)?;
    let forecasts = crate::io::read_forecasts(&args.forecasts)?;
    let mut report = evaluate_forecasts(&ds, &forecasts, args.tau).context("evaluating")?;

    if let Some(dir) = &args.members {
        let mut member_forecasts = Vec::new();
        let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "csv"))
            .collect();
        paths.sort();
        for path in paths {
            member_forecasts.push(crate::io::read_forecasts(&path)?);
        }
        report.correlation = Some(member_residual_correlation(&member_forecasts, &ds)?);
    }

    std::fs::create_dir_all(&args.out)?;
    std::fs::write(args.out.join("report.json"), report.to_json()?)?;
    std::fs::write(args.out.join("report.csv"), report.splits_csv())?;
    std::fs::write(args.out.join("per_series.csv"), report.per_series_csv())?;

    println!(
        "OWA {:.4}  SMAPE {:.3}  MASE {:.3}  MDA {:.3}  coverage@{} {:.3}  ({} series)",
        report.average.owa,
        report.average.smape,
        report.average.mase,
        report.average.mda,
        args.tau,
        report.average.coverage,
        report.average.count
    );
    if let Some((mean, std)) = report.correlation {
        println!("member error correlation: {mean:.3} +- {std:.3}");
    }
    Ok(())
}
