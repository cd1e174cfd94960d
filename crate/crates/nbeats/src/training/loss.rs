//! Differentiable training losses built on the tape. Denominators carry an
//! epsilon guard of 1e-8 (evaluation metrics in [`crate::metrics`] do not;
//! they raise instead).

use crate::error::Result;
use crate::tensor::tape::{Tape, Var};
use crate::tensor::{Scalar, Tensor};

pub const LOSS_EPS: f64 = 1e-8;

/// Per-series mean over masked horizon steps, then mean over series.
/// `masked` is `[n, h]` already multiplied by the target mask.
fn per_series_mean<T: Scalar>(
    tape: &mut Tape<T>,
    masked: Var,
    mask: &Tensor<T>,
) -> Result<Var> {
    let n = mask.rows();
    let inv_counts: Vec<T> = (0..n)
        .map(|i| {
            let count: f64 = mask.row(i).iter().map(|v| v.as_f64()).sum();
            T::from_f64(if count > 0.0 { 1.0 / count } else { 0.0 })
        })
        .collect();
    let inv = Tensor::from_vec(&[n], inv_counts)?;
    let rows = tape.sum_axis(masked, 1)?;
    let means = tape.mul_const(rows, &inv)?;
    Ok(tape.mean_all(means))
}

/// Masked SMAPE: mean over series of `200/h * sum |y - f| / (|y| + |f| + eps)`.
pub fn smape_loss<T: Scalar>(
    tape: &mut Tape<T>,
    forecast: Var,
    target: &Tensor<T>,
    mask: &Tensor<T>,
) -> Result<Var> {
    let t = tape.leaf(target.clone());
    let diff = tape.sub(forecast, t)?;
    let num = tape.abs(diff);
    let abs_f = tape.abs(forecast);
    let abs_t = tape.leaf(target.abs());
    let den_raw = tape.add(abs_f, abs_t)?;
    let den = tape.add_scalar(den_raw, T::from_f64(LOSS_EPS));
    let ratio = tape.div(num, den)?;
    let scaled = tape.mul_scalar(ratio, T::from_f64(200.0));
    let masked = tape.mul_const(scaled, mask)?;
    per_series_mean(tape, masked, mask)
}

/// Masked MAPE: mean over series of `100/h * sum |y - f| / (|y| + eps)`.
pub fn mape_loss<T: Scalar>(
    tape: &mut Tape<T>,
    forecast: Var,
    target: &Tensor<T>,
    mask: &Tensor<T>,
) -> Result<Var> {
    let t = tape.leaf(target.clone());
    let diff = tape.sub(forecast, t)?;
    let num = tape.abs(diff);
    let inv_den = target.map(|y| T::from_f64(100.0 / (y.as_f64().abs() + LOSS_EPS)));
    let ratio = tape.mul_const(num, &inv_den)?;
    let masked = tape.mul_const(ratio, mask)?;
    per_series_mean(tape, masked, mask)
}

/// Masked MASE: per-series mean absolute error divided by the seasonal
/// naive mean absolute difference of the series' lookback window (plus
/// eps), then averaged over series. `naive_mad` holds that per-series
/// denominator, computed by the sampler over the unpadded window.
pub fn mase_loss<T: Scalar>(
    tape: &mut Tape<T>,
    forecast: Var,
    target: &Tensor<T>,
    mask: &Tensor<T>,
    naive_mad: &[f64],
) -> Result<Var> {
    let n = mask.rows();
    debug_assert_eq!(naive_mad.len(), n);
    let t = tape.leaf(target.clone());
    let diff = tape.sub(forecast, t)?;
    let err = tape.abs(diff);
    let masked = tape.mul_const(err, mask)?;
    let rows = tape.sum_axis(masked, 1)?;
    // Fold mask count and denominator into one per-series weight.
    let weights: Vec<T> = (0..n)
        .map(|i| {
            let count: f64 = mask.row(i).iter().map(|v| v.as_f64()).sum();
            let w = if count > 0.0 {
                1.0 / (count * (naive_mad[i] + LOSS_EPS))
            } else {
                0.0
            };
            T::from_f64(w)
        })
        .collect();
    let w = Tensor::from_vec(&[n], weights)?;
    let weighted = tape.mul_const(rows, &w)?;
    Ok(tape.mean_all(weighted))
}

/// Mean over heads of the per-head loss — the cooperation term that trains
/// all `W` models at once. `losses` holds the per-head scalar loss vars.
pub fn multihead_loss<T: Scalar>(tape: &mut Tape<T>, losses: &[Var]) -> Result<Var> {
    let mut acc = losses[0];
    for &l in &losses[1..] {
        acc = tape.add(acc, l)?;
    }
    Ok(tape.mul_scalar(acc, T::from_f64(1.0 / losses.len() as f64)))
}
