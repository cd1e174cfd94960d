//! Bagging-grid construction, multi-member training, median combination,
//! persistence and zero-shot application.

pub mod combine;
pub mod store;
pub mod train;
pub mod zeroshot;

pub use combine::{median_combine, median_of_rows};
pub use store::{load_ensemble, save_ensemble};
pub use train::{train_ensemble, MemberFailure};
pub use zeroshot::{adapt_horizon, forecast_dataset, zero_shot_apply};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::data::{Frequency, ScaleMode};
use crate::error::{Error, Result};
use crate::model::{AnyModel, LookbackGrid, ModelConfig};
use crate::training::trainer::derive_seed;
use crate::training::{preset_iterations, preset_l_h, Precision, TrainConfig};

/// Training loss of one ensemble member.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum LossKind {
    Smape,
    Mape,
    Mase,
}

impl LossKind {
    pub const ALL: [LossKind; 3] = [LossKind::Smape, LossKind::Mase, LossKind::Mape];

    pub fn name(self) -> &'static str {
        match self {
            LossKind::Smape => "smape",
            LossKind::Mape => "mape",
            LossKind::Mase => "mase",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "smape" => Some(LossKind::Smape),
            "mape" => Some(LossKind::Mape),
            "mase" => Some(LossKind::Mase),
            _ => None,
        }
    }
}

/// Whether lookback diversity lives inside one parallel member or across
/// independently trained single-lookback members.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum LookbackMode {
    /// One member holds all `W` heads.
    Parallel,
    /// One member per lookback length.
    Independent,
}

/// Zero-shot training/application regime.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum Regime {
    /// Use the source-native model unchanged; horizons are adapted at
    /// application time by truncation or iterated forecasting.
    RO,
    /// Train with the target dataset's horizon.
    RSh,
    /// Like `RSh` but with longer history (`L_H = 10`) and 15k iterations
    /// everywhere.
    RShLt,
}

impl Regime {
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "r-o" | "ro" => Some(Regime::RO),
            "r-sh" | "rsh" => Some(Regime::RSh),
            "r-sh-lt" | "rshlt" => Some(Regime::RShLt),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Regime::RO => "R_O",
            Regime::RSh => "R_SH",
            Regime::RShLt => "R_SH_LT",
        }
    }
}

/// How the `W` heads of a parallel member enter the median combination.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum HeadPooling {
    /// Every head is a separate vote (default; preserves the lookback
    /// diversity the independent ensemble had).
    Votes,
    /// Pool the heads of a member by median first, one vote per member.
    MemberMedian,
}

/// Which network topology the members use.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ModelPreset {
    Generic,
    Interpretable,
    Custom(ModelConfig),
}

impl ModelPreset {
    pub fn config(&self) -> ModelConfig {
        match self {
            ModelPreset::Generic => ModelConfig::generic(),
            ModelPreset::Interpretable => ModelConfig::interpretable(),
            ModelPreset::Custom(cfg) => cfg.clone(),
        }
    }
}

/// Optional knobs overriding the per-frequency training presets.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainOverrides {
    pub iterations: Option<usize>,
    pub batch_size: Option<usize>,
    pub lr: Option<f64>,
    pub l_h: Option<f64>,
    pub precision: Option<Precision>,
    pub scale_mode: Option<ScaleMode>,
}

/// The bagging grid: losses x repeats x frequencies (x lookbacks when
/// members are independent single-lookback models).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub model: ModelPreset,
    pub losses: Vec<LossKind>,
    pub repeats: usize,
    pub frequencies: Vec<Frequency>,
    pub lookback_mode: LookbackMode,
    pub regime: Regime,
    pub head_pooling: HeadPooling,
    /// Member training horizon per frequency; the M4 horizon when absent.
    /// Under `RSh`/`RShLt` this is where target horizons go.
    pub horizon_overrides: BTreeMap<Frequency, usize>,
    pub train: TrainOverrides,
}

impl EnsembleSpec {
    pub fn new(model: ModelPreset, frequencies: Vec<Frequency>) -> Self {
        EnsembleSpec {
            model,
            losses: LossKind::ALL.to_vec(),
            repeats: 10,
            frequencies,
            lookback_mode: LookbackMode::Parallel,
            regime: Regime::RO,
            head_pooling: HeadPooling::Votes,
            horizon_overrides: BTreeMap::new(),
            train: TrainOverrides::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.losses.is_empty() {
            return Err(Error::InvalidConfig("ensemble needs at least one loss".into()));
        }
        if self.repeats == 0 {
            return Err(Error::InvalidConfig("repeats must be at least 1".into()));
        }
        if self.frequencies.is_empty() {
            return Err(Error::InvalidConfig(
                "ensemble needs at least one frequency".into(),
            ));
        }
        self.model.config().validate()
    }

    pub fn horizon_for(&self, freq: Frequency) -> usize {
        self.horizon_overrides
            .get(&freq)
            .copied()
            .unwrap_or_else(|| freq.default_horizon())
    }
}

/// A fully resolved member of the bagging grid.
#[derive(Clone, Debug)]
pub struct MemberPlan {
    pub index: usize,
    pub frequency: Frequency,
    pub loss: LossKind,
    pub repeat: usize,
    /// `Some(l)` for independent single-lookback members.
    pub lookback: Option<usize>,
    pub horizon: usize,
    pub grid: LookbackGrid,
    pub model: ModelConfig,
    pub train: TrainConfig,
}

/// Expand the spec into the full member grid. Seeds derive from the master
/// seed and the member's grid index, so training order and concurrency
/// cannot change any member.
pub fn plan_members(spec: &EnsembleSpec, master_seed: u64) -> Result<Vec<MemberPlan>> {
    spec.validate()?;
    let parallel = spec.lookback_mode == LookbackMode::Parallel;
    let model = spec.model.config();
    let mut plans = Vec::new();
    for &freq in &spec.frequencies {
        let horizon = spec.horizon_for(freq);
        let full_grid = LookbackGrid::from_horizon(horizon);
        let lookbacks: Vec<Option<usize>> = match spec.lookback_mode {
            LookbackMode::Parallel => vec![None],
            LookbackMode::Independent => {
                full_grid.lookbacks().iter().map(|&l| Some(l)).collect()
            }
        };
        for lookback in lookbacks {
            for &loss in &spec.losses {
                for repeat in 0..spec.repeats {
                    let index = plans.len();
                    let grid = match lookback {
                        None => full_grid.clone(),
                        Some(l) => LookbackGrid::single(l, horizon)?,
                    };
                    let iterations = spec.train.iterations.unwrap_or(match spec.regime {
                        Regime::RO | Regime::RSh => preset_iterations(freq, parallel),
                        Regime::RShLt => 15_000,
                    });
                    let l_h = spec.train.l_h.unwrap_or(match spec.regime {
                        Regime::RO | Regime::RSh => preset_l_h(freq),
                        Regime::RShLt => 10.0,
                    });
                    let train = TrainConfig {
                        iterations,
                        batch_size: spec.train.batch_size.unwrap_or(1024),
                        lr: spec.train.lr.unwrap_or(1e-3),
                        loss,
                        l_h,
                        seed: derive_seed(master_seed, index as u64),
                        precision: spec.train.precision.unwrap_or(Precision::F64),
                        scale_mode: spec.train.scale_mode.unwrap_or(ScaleMode::PerUnion),
                    };
                    plans.push(MemberPlan {
                        index,
                        frequency: freq,
                        loss,
                        repeat,
                        lookback,
                        horizon,
                        grid,
                        model: model.clone(),
                        train,
                    });
                }
            }
        }
    }
    Ok(plans)
}

/// Descriptive record of a trained member. Everything here is a pure
/// function of the spec and master seed, so saved ensembles are
/// byte-identical across reruns (wall-clock timing lives in the training
/// result, not in persisted metadata).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MemberMeta {
    pub index: usize,
    pub frequency: Frequency,
    pub loss: LossKind,
    pub repeat: usize,
    pub lookback: Option<usize>,
    pub horizon: usize,
    pub seed: u64,
    pub iterations: usize,
    pub scale_mode: ScaleMode,
}

/// A trained member: provenance plus the model at its stored precision.
#[derive(Clone, Debug)]
pub struct Member {
    pub meta: MemberMeta,
    pub model: AnyModel,
}

/// A trained ensemble.
#[derive(Clone, Debug)]
pub struct Ensemble {
    pub spec: EnsembleSpec,
    pub master_seed: u64,
    pub members: Vec<Member>,
}

impl Ensemble {
    /// Members for a target frequency. `Other` falls back to the quarterly
    /// members when no member was trained on `Other` directly.
    pub fn members_for(&self, freq: Frequency) -> Result<Vec<&Member>> {
        let exact: Vec<&Member> = self
            .members
            .iter()
            .filter(|m| m.meta.frequency == freq)
            .collect();
        if !exact.is_empty() {
            return Ok(exact);
        }
        if freq == Frequency::Other {
            let quarterly: Vec<&Member> = self
                .members
                .iter()
                .filter(|m| m.meta.frequency == Frequency::Quarterly)
                .collect();
            if !quarterly.is_empty() {
                return Ok(quarterly);
            }
        }
        Err(Error::NoMembersForFrequency(freq.name().to_string()))
    }
}

/// Forecasts of every vote (member, or member-head pair) in original units.
#[derive(Clone, Debug, Default)]
pub struct ForecastSet {
    pub votes: Vec<Vote>,
}

/// One vote: the forecasts a single member head produced.
#[derive(Clone, Debug)]
pub struct Vote {
    pub member: usize,
    pub head: usize,
    pub forecasts: BTreeMap<String, Vec<f64>>,
}

impl ForecastSet {
    /// All series ids appearing in any vote.
    pub fn series_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self
            .votes
            .iter()
            .flat_map(|v| v.forecasts.keys().cloned())
            .collect();
        ids.sort();
        ids.dedup();
        ids
    }

    pub fn votes_for(&self, id: &str) -> Vec<&[f64]> {
        self.votes
            .iter()
            .filter_map(|v| v.forecasts.get(id).map(|f| f.as_slice()))
            .collect()
    }

    /// Group votes by member and pool each member's heads with an
    /// elementwise median, producing one vote per member.
    pub fn pooled_per_member(&self) -> ForecastSet {
        let mut by_member: BTreeMap<usize, Vec<&Vote>> = BTreeMap::new();
        for v in &self.votes {
            by_member.entry(v.member).or_default().push(v);
        }
        let votes = by_member
            .into_iter()
            .map(|(member, votes)| {
                let mut forecasts: BTreeMap<String, Vec<f64>> = BTreeMap::new();
                let ids: Vec<&String> = {
                    let mut ids: Vec<&String> =
                        votes.iter().flat_map(|v| v.forecasts.keys()).collect();
                    ids.sort();
                    ids.dedup();
                    ids
                };
                for id in ids {
                    let rows: Vec<&[f64]> = votes
                        .iter()
                        .filter_map(|v| v.forecasts.get(id).map(|f| f.as_slice()))
                        .collect();
                    forecasts.insert(id.clone(), combine::median_of_rows(&rows));
                }
                Vote {
                    member,
                    head: 0,
                    forecasts,
                }
            })
            .collect();
        ForecastSet { votes }
    }
}
