//! `nbeats params`: parameter accounting for a preset grid or a trained
//! ensemble, optionally against independently trained single-lookback
//! models.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;

use nbeats::data::Frequency;
use nbeats::ensemble::{load_ensemble, plan_members};
use nbeats::model::{build_model, LookbackGrid};

use crate::config::{self, ModelKnobs, RunConfig};

#[derive(Args)]
pub struct ParamsArgs {
    /// Run configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Preset name, when not using a config file.
    #[arg(long)]
    pub preset: Option<String>,
    /// Trained ensemble directory to inspect instead of a preset.
    #[arg(long)]
    pub ensemble: Option<PathBuf>,
    /// Comma-separated frequencies (defaults to all six).
    #[arg(long, value_delimiter = ',')]
    pub frequencies: Option<Vec<String>>,
    /// Also count six independent single-lookback models per frequency and
    /// report the reduction ratio.
    #[arg(long)]
    pub compare_independent: bool,
}

pub fn run(args: ParamsArgs) -> Result<()> {
    if let Some(dir) = &args.ensemble {
        let ens = load_ensemble(dir).context("loading ensemble")?;
        println!("index,frequency,loss,repeat,lookback,params");
        let mut total = 0usize;
        for m in &ens.members {
            let count = m.model.count_parameters();
            total += count;
            println!(
                "{},{},{},{},{},{}",
                m.meta.index,
                m.meta.frequency,
                m.meta.loss.name(),
                m.meta.repeat,
                m.meta
                    .lookback
                    .map(|l| l.to_string())
                    .unwrap_or_else(|| "parallel".into()),
                count
            );
        }
        println!("total,,,,,{total}");
        return Ok(());
    }

    let mut cfg = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if args.preset.is_some() {
        cfg.preset = args.preset.clone();
    }
    let Some(preset) = cfg.preset.clone() else {
        bail!("need --preset, --config or --ensemble");
    };
    let (_, model_preset) = config::resolve_preset(&preset, &ModelKnobs::default())?;
    let model_cfg = model_preset.config();

    let frequencies = match &args.frequencies {
        Some(f) => config::parse_frequencies(f)?,
        None => Frequency::ALL.to_vec(),
    };
    let mut spec = nbeats::ensemble::EnsembleSpec::new(model_preset, frequencies.clone());
    if let Some(losses) = &cfg.ensemble.losses {
        spec.losses = config::parse_losses(losses)?;
    }
    if let Some(repeats) = cfg.ensemble.repeats {
        spec.repeats = repeats;
    }
    let members_per_freq = spec.losses.len() * spec.repeats;

    println!("frequency,horizon,members,params_per_member,ensemble_params");
    let mut grand_total = 0usize;
    for freq in &frequencies {
        let h = spec.horizon_for(*freq);
        let grid = LookbackGrid::from_horizon(h);
        let parallel = build_model::<f64>(&model_cfg, &grid, 0)?;
        let per_member = parallel.count_parameters();
        drop(parallel);
        let ensemble_params = per_member * members_per_freq;
        grand_total += ensemble_params;
        if args.compare_independent {
            let mut singles = 0usize;
            for &l in grid.lookbacks() {
                let g = LookbackGrid::single(l, h)?;
                singles += build_model::<f64>(&model_cfg, &g, 0)?.count_parameters();
            }
            println!(
                "{freq},{h},{members_per_freq},{per_member},{ensemble_params} (independent: {singles} per grid, ratio {:.3})",
                singles as f64 / per_member as f64
            );
        } else {
            println!("{freq},{h},{members_per_freq},{per_member},{ensemble_params}");
        }
    }
    println!("total,,,,{grand_total}");
    let _ = plan_members(&spec, 0).map(|p| {
        log::info!("full grid: {} members", p.len());
    });
    Ok(())
}
