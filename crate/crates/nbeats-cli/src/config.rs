//! Run configuration: a JSON file declaring the whole run, with presets for
//! the published hyperparameter grids. Command-line flags override file
//! values; unknown keys are rejected.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::Deserialize;

use nbeats::data::{Frequency, ScaleMode};
use nbeats::ensemble::{EnsembleSpec, HeadPooling, LookbackMode, LossKind, ModelPreset, Regime};
use nbeats::model::ModelConfig;
use nbeats::training::Precision;

pub const PRESETS: [&str; 4] = [
    "m4-parallel-generic",
    "m4-parallel-interpretable",
    "m4-generic",
    "m4-interpretable",
];

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub preset: Option<String>,
    pub dataset: Option<DatasetPaths>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub ensemble: EnsembleOverrides,
    pub train: TrainKnobs,
    pub model: ModelKnobs,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetPaths {
    pub values: PathBuf,
    pub meta: PathBuf,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnsembleOverrides {
    pub losses: Option<Vec<String>>,
    pub repeats: Option<usize>,
    pub frequencies: Option<Vec<String>>,
    pub regime: Option<String>,
    pub head_pooling: Option<String>,
    /// Per-frequency horizon overrides (zero-shot retargeting).
    pub horizons: Option<BTreeMap<String, usize>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainKnobs {
    pub iterations: Option<usize>,
    pub batch_size: Option<usize>,
    pub lr: Option<f64>,
    pub l_h: Option<f64>,
    pub precision: Option<u32>,
    pub scale_mode: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelKnobs {
    /// Generic preset: number of stacks.
    pub stacks: Option<usize>,
    /// Generic preset: hidden width.
    pub width: Option<usize>,
    /// Interpretable preset widths.
    pub trend_width: Option<usize>,
    pub seasonal_width: Option<usize>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        // serde_json errors carry line and column positions.
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

pub fn parse_losses(items: &[String]) -> Result<Vec<LossKind>> {
    items
        .iter()
        .map(|s| LossKind::parse(s).ok_or_else(|| anyhow!("unknown loss {s:?} (smape|mape|mase)")))
        .collect()
}

pub fn parse_frequencies(items: &[String]) -> Result<Vec<Frequency>> {
    items
        .iter()
        .map(|s| Frequency::parse(s).ok_or_else(|| anyhow!("unknown frequency {s:?}")))
        .collect()
}

pub fn parse_regime(s: &str) -> Result<Regime> {
    Regime::parse(s).ok_or_else(|| anyhow!("unknown regime {s:?} (r-o|r-sh|r-sh-lt)"))
}

fn parse_scale_mode(s: &str) -> Result<ScaleMode> {
    match s.to_ascii_lowercase().replace('_', "-").as_str() {
        "per-union" => Ok(ScaleMode::PerUnion),
        "per-window" => Ok(ScaleMode::PerWindow),
        _ => bail!("unknown scale mode {s:?} (per-union|per-window)"),
    }
}

fn parse_head_pooling(s: &str) -> Result<HeadPooling> {
    match s.to_ascii_lowercase().replace('_', "-").as_str() {
        "votes" => Ok(HeadPooling::Votes),
        "member-median" => Ok(HeadPooling::MemberMedian),
        _ => bail!("unknown head pooling {s:?} (votes|member-median)"),
    }
}

/// Resolve a preset name into (lookback mode, model preset), applying any
/// size knobs.
pub fn resolve_preset(name: &str, model: &ModelKnobs) -> Result<(LookbackMode, ModelPreset)> {
    let (mode, interpretable) = match name {
        "m4-parallel-generic" => (LookbackMode::Parallel, false),
        "m4-parallel-interpretable" => (LookbackMode::Parallel, true),
        "m4-generic" => (LookbackMode::Independent, false),
        "m4-interpretable" => (LookbackMode::Independent, true),
        other => bail!(
            "unknown preset {other:?}; available presets: {}",
            PRESETS.join(", ")
        ),
    };
    let sized = if interpretable {
        match (model.trend_width, model.seasonal_width) {
            (None, None) => ModelPreset::Interpretable,
            (t, s) => ModelPreset::Custom(ModelConfig::interpretable_sized(
                t.unwrap_or(256),
                s.unwrap_or(2048),
            )),
        }
    } else {
        match (model.stacks, model.width) {
            (None, None) => ModelPreset::Generic,
            (st, w) => ModelPreset::Custom(ModelConfig::generic_sized(
                st.unwrap_or(30),
                w.unwrap_or(512),
            )),
        }
    };
    Ok((mode, sized))
}

/// Build the full ensemble spec from the config file plus flag overrides
/// (already merged into `cfg` by the caller).
pub fn build_spec(cfg: &RunConfig) -> Result<EnsembleSpec> {
    let preset = cfg
        .preset
        .as_deref()
        .ok_or_else(|| anyhow!("no preset given; available presets: {}", PRESETS.join(", ")))?;
    let (mode, model) = resolve_preset(preset, &cfg.model)?;
    let frequencies = match &cfg.ensemble.frequencies {
        Some(f) => parse_frequencies(f)?,
        None => Frequency::ALL.to_vec(),
    };
    let mut spec = EnsembleSpec::new(model, frequencies);
    spec.lookback_mode = mode;
    if let Some(losses) = &cfg.ensemble.losses {
        spec.losses = parse_losses(losses)?;
    }
    if let Some(repeats) = cfg.ensemble.repeats {
        spec.repeats = repeats;
    }
    if let Some(regime) = &cfg.ensemble.regime {
        spec.regime = parse_regime(regime)?;
    }
    if let Some(pooling) = &cfg.ensemble.head_pooling {
        spec.head_pooling = parse_head_pooling(pooling)?;
    }
    if let Some(horizons) = &cfg.ensemble.horizons {
        for (freq, h) in horizons {
            let f = Frequency::parse(freq).ok_or_else(|| anyhow!("unknown frequency {freq:?}"))?;
            spec.horizon_overrides.insert(f, *h);
        }
    }
    spec.train.iterations = cfg.train.iterations;
    spec.train.batch_size = cfg.train.batch_size;
    spec.train.lr = cfg.train.lr;
    spec.train.l_h = cfg.train.l_h;
    spec.train.precision = match cfg.train.precision {
        None => None,
        Some(32) => Some(Precision::F32),
        Some(64) => Some(Precision::F64),
        Some(other) => bail!("precision must be 32 or 64, got {other}"),
    };
    spec.train.scale_mode = cfg
        .train
        .scale_mode
        .as_deref()
        .map(parse_scale_mode)
        .transpose()?;
    Ok(spec)
}
