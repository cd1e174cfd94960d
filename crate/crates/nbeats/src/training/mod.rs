//! Window sampling, training losses, the Adam optimizer, the three-plateau
//! learning-rate schedule and the single-member training loop.

pub mod adam;
pub mod loss;
pub mod sampler;
pub mod trainer;

pub use adam::Adam;
pub use loss::{mape_loss, mase_loss, multihead_loss, smape_loss};
pub use sampler::{sample_batch, Batch, TrainView};
pub use trainer::{train_member, TracePoint, TrainOutcome};

use serde::{Deserialize, Serialize};

use crate::data::{Frequency, ScaleMode};
use crate::ensemble::LossKind;
use crate::error::{Error, Result};

/// Numeric width a member trains at.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum Precision {
    F32,
    F64,
}

impl Precision {
    pub fn bits(self) -> u32 {
        match self {
            Precision::F32 => 32,
            Precision::F64 => 64,
        }
    }
}

/// Configuration of one training run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub iterations: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub loss: LossKind,
    /// Training-history coefficient: forecast origins are drawn from the
    /// last `ceil(l_h * horizon)` admissible positions of the train segment.
    pub l_h: f64,
    pub seed: u64,
    pub precision: Precision,
    pub scale_mode: ScaleMode,
}

impl TrainConfig {
    /// Table defaults for a frequency: batch 1024, lr 1e-3, per-union
    /// scaling; iterations and `L_H` depend on the frequency (`parallel`
    /// selects the multi-head iteration budget, which differs on yearly
    /// data).
    pub fn preset(freq: Frequency, loss: LossKind, parallel: bool) -> Self {
        TrainConfig {
            iterations: preset_iterations(freq, parallel),
            batch_size: 1024,
            lr: 1e-3,
            loss,
            l_h: preset_l_h(freq),
            seed: 0,
            precision: Precision::F64,
            scale_mode: ScaleMode::PerUnion,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be at least 1".into()));
        }
        if !(self.l_h > 0.0) {
            return Err(Error::InvalidConfig("l_h must be positive".into()));
        }
        if !(self.lr > 0.0) {
            return Err(Error::InvalidConfig("lr must be positive".into()));
        }
        Ok(())
    }
}

/// Iteration budgets per frequency: 15k for quarterly/monthly, 10k yearly
/// for the parallel model (15k otherwise), 5k for weekly/daily/hourly.
pub fn preset_iterations(freq: Frequency, parallel: bool) -> usize {
    match freq {
        Frequency::Yearly => {
            if parallel {
                10_000
            } else {
                15_000
            }
        }
        Frequency::Quarterly | Frequency::Monthly | Frequency::Other => 15_000,
        Frequency::Weekly | Frequency::Daily | Frequency::Hourly => 5_000,
    }
}

/// History coefficient per frequency: 1.5 for yearly/quarterly/monthly, 10
/// for weekly/daily/hourly.
pub fn preset_l_h(freq: Frequency) -> f64 {
    match freq {
        Frequency::Yearly | Frequency::Quarterly | Frequency::Monthly | Frequency::Other => 1.5,
        Frequency::Weekly | Frequency::Daily | Frequency::Hourly => 10.0,
    }
}

/// Piecewise-constant learning rate: three equal plateaus dropping by 10x.
pub fn lr_at(iteration: usize, total: usize, base_lr: f64) -> f64 {
    debug_assert!(iteration < total);
    if 3 * iteration < total {
        base_lr
    } else if 3 * iteration < 2 * total {
        base_lr / 10.0
    } else {
        base_lr / 100.0
    }
}
