//! Lookback grids, head masks and window embedding.
//!
//! A model has `W` heads, one per lookback length. All heads consume a
//! shared length-`L` buffer (`L` = longest lookback); shorter heads see
//! their window right-aligned on the most recent observation with zeros in
//! the oldest positions. Bias-free input layers guarantee those zeros
//! contribute nothing, which is what makes the parallel model equal to `W`
//! sequential single-head models.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{Scalar, Tensor};

/// The `W` lookback window lengths of a model, plus its forecast horizon.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LookbackGrid {
    lookbacks: Vec<usize>,
    horizon: usize,
}

impl LookbackGrid {
    /// Build a grid from explicit window lengths (strictly increasing).
    pub fn new(lookbacks: Vec<usize>, horizon: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::InvalidConfig("horizon must be at least 1".into()));
        }
        if lookbacks.is_empty() {
            return Err(Error::InvalidConfig("at least one lookback".into()));
        }
        if lookbacks[0] == 0 || lookbacks.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig(format!(
                "lookbacks must be positive and strictly increasing, got {lookbacks:?}"
            )));
        }
        Ok(LookbackGrid { lookbacks, horizon })
    }

    /// The standard grid of multiples `2H..7H`.
    pub fn from_horizon(horizon: usize) -> Self {
        LookbackGrid {
            lookbacks: (2..=7).map(|k| k * horizon).collect(),
            horizon,
        }
    }

    /// A single-lookback grid (`W = 1`).
    pub fn single(lookback: usize, horizon: usize) -> Result<Self> {
        Self::new(vec![lookback], horizon)
    }

    pub fn lookbacks(&self) -> &[usize] {
        &self.lookbacks
    }

    pub fn lookback(&self, head: usize) -> usize {
        self.lookbacks[head]
    }

    /// Number of heads `W`.
    pub fn heads(&self) -> usize {
        self.lookbacks.len()
    }

    /// Longest lookback `L`.
    pub fn max_lookback(&self) -> usize {
        *self.lookbacks.last().unwrap()
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Binary masks, one per head: a length-`L` vector with ones on the
    /// `l_w` most recent positions.
    pub fn head_masks<T: Scalar>(&self) -> Vec<Tensor<T>> {
        let l_max = self.max_lookback();
        self.lookbacks
            .iter()
            .map(|&l| {
                let mut m = vec![T::zero(); l_max];
                for v in m.iter_mut().skip(l_max - l) {
                    *v = T::one();
                }
                Tensor::from_vec(&[l_max], m).unwrap()
            })
            .collect()
    }
}

/// Embed per-series histories into per-head input channels.
///
/// Returns `W` tensors of shape `[N, L]`: channel `w` of series `i` holds
/// the last `min(l_w, len)` observations right-aligned at the newest
/// positions, zeros elsewhere (histories shorter than the window are
/// front-padded inside the window too). Also returns the per-head masks.
pub fn embed_windows<T: Scalar>(
    histories: &[&[f64]],
    grid: &LookbackGrid,
) -> Result<(Vec<Tensor<T>>, Vec<Tensor<T>>)> {
    if let Some(pos) = histories.iter().position(|h| h.is_empty()) {
        return Err(Error::EmptySeries {
            id: format!("history #{pos}"),
        });
    }
    let n = histories.len();
    let l_max = grid.max_lookback();
    let mut heads = Vec::with_capacity(grid.heads());
    for &l in grid.lookbacks() {
        let mut data = vec![T::zero(); n * l_max];
        for (i, h) in histories.iter().enumerate() {
            let avail = l.min(h.len());
            let src = &h[h.len() - avail..];
            let dst = i * l_max + (l_max - avail);
            for (j, &v) in src.iter().enumerate() {
                data[dst + j] = T::from_f64(v);
            }
        }
        heads.push(Tensor::from_vec(&[n, l_max], data)?);
    }
    Ok((heads, grid.head_masks()))
}
