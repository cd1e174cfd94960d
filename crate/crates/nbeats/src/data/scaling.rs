//! Window scaling: divide lookback windows (and targets) by the largest
//! absolute value observed, either per window or over the union of all
//! windows of a series.

use serde::{Deserialize, Serialize};

/// Which observations the scale factor is computed over.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum ScaleMode {
    /// Each lookback window is divided by its own maximum — the classic
    /// scaled single-lookback setup.
    PerWindow,
    /// All windows of one series share the maximum over their union, which
    /// is the longest window since all windows end at the same origin.
    PerUnion,
}

/// Scale factor for a window: the maximum absolute value, or 1 for an
/// all-zero (or empty) window so scaling is always invertible.
pub fn scale_factor(window: &[f64]) -> f64 {
    let s = window.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if s == 0.0 {
        1.0
    } else {
        s
    }
}

/// Scale a batch of per-series windows. Returns the per-window factors;
/// under [`ScaleMode::PerUnion`] every window of a series gets the same
/// factor (the maximum over the union).
pub fn scale_windows(windows: &mut [Vec<f64>], mode: ScaleMode) -> Vec<f64> {
    match mode {
        ScaleMode::PerWindow => windows
            .iter_mut()
            .map(|w| {
                let s = scale_factor(w);
                for v in w.iter_mut() {
                    *v /= s;
                }
                s
            })
            .collect(),
        ScaleMode::PerUnion => {
            let s = windows
                .iter()
                .map(|w| scale_factor(w))
                .fold(0.0f64, f64::max);
            let s = if s == 0.0 { 1.0 } else { s };
            for w in windows.iter_mut() {
                for v in w.iter_mut() {
                    *v /= s;
                }
            }
            vec![s; windows.len()]
        }
    }
}

/// Map a forecast back to original units.
pub fn unscale_forecast(forecast: &mut [f64], s: f64) {
    debug_assert!(s > 0.0);
    for v in forecast.iter_mut() {
        *v *= s;
    }
}
