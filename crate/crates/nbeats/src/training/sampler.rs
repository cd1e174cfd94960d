//! Uniform batch sampling over one frequency subpopulation.
//!
//! Each draw picks a series, then a forecast origin near the end of its
//! train segment: the origin comes from the last `ceil(L_H * H)` positions
//! that allow a full lookback and a full target. Series too short for that
//! fall back to tail origins with front-padded windows and masked targets.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::data::{scale_factor, Dataset, ScaleMode};
use crate::error::{Error, Result};
use crate::model::LookbackGrid;
use crate::tensor::{Scalar, Tensor};
use crate::training::TrainConfig;

/// Train-segment slices of the series a member trains on, all sharing one
/// frequency (hence one seasonality and horizon).
pub struct TrainView<'a> {
    pub series: Vec<&'a [f64]>,
    /// Seasonality period for the MASE denominator.
    pub m: usize,
}

impl<'a> TrainView<'a> {
    /// View over the train segments of `indices` in `ds`.
    pub fn from_dataset(ds: &'a Dataset, indices: &[usize]) -> Self {
        let m = indices
            .first()
            .map(|&i| ds.series[i].m)
            .unwrap_or(1);
        TrainView {
            series: indices.iter().map(|&i| ds.train_values(i)).collect(),
            m,
        }
    }

    /// Indices of series long enough to provide one input and one target.
    fn usable(&self) -> Vec<usize> {
        (0..self.series.len())
            .filter(|&i| self.series[i].len() >= 2)
            .collect()
    }
}

/// One training batch. `heads[w]` is the scaled `[n, L]` input channel of
/// head `w`; `targets[w]` holds the same raw targets divided by head `w`'s
/// scale factor so forecasts and targets live in the same units.
pub struct Batch<T: Scalar> {
    pub heads: Vec<Tensor<T>>,
    pub targets: Vec<Tensor<T>>,
    pub target_mask: Tensor<T>,
    /// Per-head, per-sample scale factors.
    pub scales: Vec<Vec<f64>>,
    /// Per-head, per-sample seasonal-naive mean absolute difference of the
    /// (scaled) lookback window — the window-local MASE denominator.
    pub naive_mad: Vec<Vec<f64>>,
}

/// Pick the forecast origin for a series of train length `t`.
fn pick_origin(t: usize, l_max: usize, h: usize, limit: usize, rng: &mut ChaCha8Rng) -> usize {
    if t >= l_max + h {
        // Origins with a full lookback and a full target; keep the last
        // `limit` of them.
        let hi = t - h;
        let lo = l_max.max((hi + 1).saturating_sub(limit));
        rng.random_range(lo..=hi)
    } else {
        // Short series: tail origins, padding and masking fill the gaps.
        let hi = t - 1;
        let lo = 1.max(hi.saturating_sub(limit - 1));
        rng.random_range(lo..=hi)
    }
}

/// Draw a batch: `batch_size` series uniformly with replacement, one origin
/// each, windows embedded and scaled per the configured mode.
pub fn sample_batch<T: Scalar>(
    view: &TrainView,
    grid: &LookbackGrid,
    cfg: &TrainConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Batch<T>> {
    let pool = view.usable();
    if pool.is_empty() {
        return Err(Error::InvalidConfig(
            "no series long enough to sample from".into(),
        ));
    }
    let n = cfg.batch_size;
    let w = grid.heads();
    let l_max = grid.max_lookback();
    let h = grid.horizon();
    let limit = ((cfg.l_h * h as f64).ceil() as usize).max(1);

    let mut head_data: Vec<Vec<T>> = (0..w).map(|_| vec![T::zero(); n * l_max]).collect();
    let mut target_data: Vec<Vec<T>> = (0..w).map(|_| vec![T::zero(); n * h]).collect();
    let mut mask_data = vec![T::zero(); n * h];
    let mut scales: Vec<Vec<f64>> = vec![vec![1.0; n]; w];
    let mut naive_mad: Vec<Vec<f64>> = vec![vec![0.0; n]; w];

    for i in 0..n {
        let series = view.series[pool[rng.random_range(0..pool.len())]];
        let t = series.len();
        let origin = pick_origin(t, l_max, h, limit, rng);

        let union_scale = {
            let avail = l_max.min(origin);
            scale_factor(&series[origin - avail..origin])
        };

        let avail_t = h.min(t - origin);
        for j in 0..avail_t {
            mask_data[i * h + j] = T::one();
        }

        for (hw, &lw) in grid.lookbacks().iter().enumerate() {
            let avail = lw.min(origin);
            let window = &series[origin - avail..origin];
            let s = match cfg.scale_mode {
                ScaleMode::PerUnion => union_scale,
                ScaleMode::PerWindow => scale_factor(window),
            };
            scales[hw][i] = s;
            let row = &mut head_data[hw][i * l_max..(i + 1) * l_max];
            for (j, &v) in window.iter().enumerate() {
                row[l_max - avail + j] = T::from_f64(v / s);
            }
            // Window-local seasonal-naive denominator, in scaled units.
            if avail > view.m {
                let mut acc = 0.0;
                for j in view.m..avail {
                    acc += (window[j] / s - window[j - view.m] / s).abs();
                }
                naive_mad[hw][i] = acc / (avail - view.m) as f64;
            }
            let trow = &mut target_data[hw][i * h..(i + 1) * h];
            for j in 0..avail_t {
                trow[j] = T::from_f64(series[origin + j] / s);
            }
        }
    }

    Ok(Batch {
        heads: head_data
            .into_iter()
            .map(|d| Tensor::from_vec(&[n, l_max], d))
            .collect::<Result<_>>()?,
        targets: target_data
            .into_iter()
            .map(|d| Tensor::from_vec(&[n, h], d))
            .collect::<Result<_>>()?,
        target_mask: Tensor::from_vec(&[n, h], mask_data)?,
        scales,
        naive_mad,
    })
}
