//! `nbeats train`: expand the bagging grid, train every member, persist the
//! ensemble with loss traces and a training report.

use std::io::Write;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use clap::Args;

use nbeats::ensemble::{save_ensemble, train_ensemble};
use nbeats::training::trainer::write_trace;

use crate::config::{self, RunConfig};

#[derive(Args)]
pub struct TrainArgs {
    /// Run configuration file (json).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Preset name (overrides the config file).
    #[arg(long)]
    pub preset: Option<String>,
    /// Values csv (`id,v1,v2,...`).
    #[arg(long)]
    pub values: Option<PathBuf>,
    /// Metadata csv (`id,frequency,horizon,m`).
    #[arg(long)]
    pub meta: Option<PathBuf>,
    /// Output directory for the trained ensemble.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads for member-level parallelism (0 = all cores).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Comma-separated training losses (smape,mape,mase).
    #[arg(long, value_delimiter = ',')]
    pub losses: Option<Vec<String>>,
    /// Bagging repeats per grid cell.
    #[arg(long)]
    pub repeats: Option<usize>,
    /// Comma-separated frequencies to train on.
    #[arg(long, value_delimiter = ',')]
    pub frequencies: Option<Vec<String>>,
    /// Zero-shot training regime (r-o, r-sh, r-sh-lt).
    #[arg(long)]
    pub regime: Option<String>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub l_h: Option<f64>,
    /// 32 or 64.
    #[arg(long)]
    pub precision: Option<u32>,
}

pub fn run(args: TrainArgs) -> Result<()> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    // Flags override file values.
    if args.preset.is_some() {
        cfg.preset = args.preset.clone();
    }
    if args.losses.is_some() {
        cfg.ensemble.losses = args.losses.clone();
    }
    if args.repeats.is_some() {
        cfg.ensemble.repeats = args.repeats;
    }
    if args.frequencies.is_some() {
        cfg.ensemble.frequencies = args.frequencies.clone();
    }
    if args.regime.is_some() {
        cfg.ensemble.regime = args.regime.clone();
    }
    if args.iterations.is_some() {
        cfg.train.iterations = args.iterations;
    }
    if args.batch_size.is_some() {
        cfg.train.batch_size = args.batch_size;
    }
    if args.lr.is_some() {
        cfg.train.lr = args.lr;
    }
    if args.l_h.is_some() {
        cfg.train.l_h = args.l_h;
    }
    if args.precision.is_some() {
        cfg.train.precision = args.precision;
    }

    let spec = config::build_spec(&cfg)?;
    let (values, meta) = match (&args.values, &args.meta, &cfg.dataset) {
        (Some(v), Some(m), _) => (v.clone(), m.clone()),
        (None, None, Some(d)) => (d.values.clone(), d.meta.clone()),
        _ => bail!("dataset paths required: --values/--meta or dataset{{values,meta}} in the config"),
    };
    let out = args
        .out
        .clone()
        .or(cfg.out.clone())
        .ok_or_else(|| anyhow!("output directory required (--out)"))?;
    let seed = args.seed.or(cfg.seed).unwrap_or(0);
    let threads = args.threads.or(cfg.threads).unwrap_or(0);

    let ds = super::load_split_dataset(&values, &meta)?;
    log::info!(
        "training {} members on {} series",
        nbeats::ensemble::plan_members(&spec, seed)?.len(),
        ds.len()
    );
    let started = std::time::Instant::now();
    let (ensemble, trained, failures) = train_ensemble(&ds, &spec, seed, threads)
        .context("ensemble training")?;
    save_ensemble(&ensemble, &out).context("saving ensemble")?;

    // Loss traces, one csv per member.
    let trace_dir = out.join("traces");
    std::fs::create_dir_all(&trace_dir)?;
    for t in &trained {
        write_trace(
            &t.trace,
            trace_dir.join(format!("member_{:04}.csv", t.member.meta.index)),
        )?;
    }

    // Deterministic training report; wall-clock timings go to the log file.
    let report = serde_json::json!({
        "members_trained": trained.len(),
        "failures": failures
            .iter()
            .map(|f| serde_json::json!({ "index": f.index, "error": f.error }))
            .collect::<Vec<_>>(),
        "final_losses": trained
            .iter()
            .map(|t| serde_json::json!({
                "index": t.member.meta.index,
                "loss": t.trace.last().map(|p| p.loss),
            }))
            .collect::<Vec<_>>(),
    });
    std::fs::write(out.join("train_report.json"), serde_json::to_vec_pretty(&report)?)?;

    let mut log_file = std::fs::File::create(out.join("train_log.txt"))?;
    writeln!(log_file, "total_wall_s: {:.1}", started.elapsed().as_secs_f64())?;
    for t in &trained {
        writeln!(
            log_file,
            "member {:04}: {:.1}s wall",
            t.member.meta.index, t.wall_clock_s
        )?;
    }

    if !failures.is_empty() {
        log::warn!("{} members failed; see train_report.json", failures.len());
    }
    println!(
        "trained {} members ({} failed) -> {}",
        trained.len(),
        failures.len(),
        out.display()
    );
    Ok(())
}
