//! Network configuration, construction, forward evaluation and persistence.

pub mod basis;
pub mod block;
pub mod grid;
pub mod network;
pub mod serialize;

pub use basis::{seasonal_harmonics, seasonal_matrix, trend_matrix, BasisKind};
pub use block::{AffineParams, Block, HeadBasis};
pub use grid::{embed_windows, LookbackGrid};
pub use network::{build_model, single_stack_config, BoundParams, ModelOutput, ParallelModel, Stack};
pub use serialize::{load_model, save_model, AnyModel};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Configuration of one stack of blocks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StackConfig {
    pub basis: BasisKind,
    /// Hidden width of the fully connected layers.
    pub width: usize,
    /// Number of block executions in this stack.
    pub blocks: usize,
    /// Total FC layers per block, counting the per-head input layer.
    pub layers: usize,
    /// Stack-level parameter sharing: all blocks of the stack reuse one
    /// parameter set.
    pub shared: bool,
}

/// Full network topology.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub stacks: Vec<StackConfig>,
}

impl ModelConfig {
    /// The generic preset: 30 one-block generic stacks, width 512, 4 FC
    /// layers per block, no sharing.
    pub fn generic() -> Self {
        Self::generic_sized(30, 512)
    }

    /// Generic topology with a custom stack count and width.
    pub fn generic_sized(stacks: usize, width: usize) -> Self {
        ModelConfig {
            stacks: (0..stacks)
                .map(|_| StackConfig {
                    basis: BasisKind::Generic { dim_f: 8, dim_b: 8 },
                    width,
                    blocks: 1,
                    layers: 4,
                    shared: false,
                })
                .collect(),
        }
    }

    /// The interpretable preset: a degree-2 trend stack (width 256, 3
    /// shared blocks) followed by a seasonal stack (width 2048, 3 shared
    /// blocks), 4 FC layers each.
    pub fn interpretable() -> Self {
        Self::interpretable_sized(256, 2048)
    }

    /// Interpretable topology with custom widths.
    pub fn interpretable_sized(trend_width: usize, seasonal_width: usize) -> Self {
        ModelConfig {
            stacks: vec![
                StackConfig {
                    basis: BasisKind::Trend { degree: 2 },
                    width: trend_width,
                    blocks: 3,
                    layers: 4,
                    shared: true,
                },
                StackConfig {
                    basis: BasisKind::Seasonal,
                    width: seasonal_width,
                    blocks: 3,
                    layers: 4,
                    shared: true,
                },
            ],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.stacks.is_empty() {
            return Err(Error::InvalidConfig("model needs at least one stack".into()));
        }
        for (i, s) in self.stacks.iter().enumerate() {
            if s.width == 0 || s.blocks == 0 || s.layers == 0 {
                return Err(Error::InvalidConfig(format!(
                    "stack {i}: width, blocks and layers must be at least 1"
                )));
            }
            match s.basis {
                BasisKind::Generic { dim_f, dim_b } if dim_f == 0 || dim_b == 0 => {
                    return Err(Error::InvalidConfig(format!(
                        "stack {i}: generic basis dims must be at least 1"
                    )));
                }
                BasisKind::Trend { degree } if degree > 8 => {
                    return Err(Error::InvalidConfig(format!(
                        "stack {i}: trend degree {degree} too large (max 8)"
                    )));
                }
                _ => {}
            }
        }
        Ok(())
    }
}
