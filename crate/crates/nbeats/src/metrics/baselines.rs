//! Naive baselines: random walk, seasonal random walk, and the seasonally
//! adjusted random walk (NAIVE2) that anchors the OWA metric. NAIVE2
//! follows the M4 convention: a 90%-significance autocorrelation test at
//! lag `m`, classical multiplicative decomposition with a centered moving
//! average when seasonality is detected.

use crate::error::{Error, Result};

/// Repeat the last observed value.
pub fn naive(insample: &[f64], h: usize) -> Result<Vec<f64>> {
    let last = insample.last().ok_or(Error::InsufficientHistory {
        what: "naive",
        needed: 1,
        got: 0,
    })?;
    Ok(vec![*last; h])
}

/// Repeat the last full seasonal cycle.
pub fn snaive(insample: &[f64], m: usize, h: usize) -> Result<Vec<f64>> {
    if m == 0 || insample.len() < m {
        return Err(Error::InsufficientHistory {
            what: "snaive",
            needed: m.max(1),
            got: insample.len(),
        });
    }
    let cycle = &insample[insample.len() - m..];
    Ok((0..h).map(|i| cycle[i % m]).collect())
}

/// Sample autocorrelation at `lag`.
fn acf(x: &[f64], lag: usize) -> f64 {
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    let var: f64 = x.iter().map(|v| (v - mean).powi(2)).sum();
    if var == 0.0 {
        return 0.0;
    }
    let cov: f64 = (0..n - lag)
        .map(|t| (x[t] - mean) * (x[t + lag] - mean))
        .sum();
    cov / var
}

/// The M4 seasonality test: requires at least `3m` observations and
/// `|acf(m)| > 1.645 * sqrt((1 + 2 * sum_{k<m} acf(k)^2) / T)`.
pub fn seasonality_test(insample: &[f64], m: usize) -> bool {
    if m <= 1 || insample.len() < 3 * m {
        return false;
    }
    let t = insample.len() as f64;
    let mut acc = 0.0;
    for k in 1..m {
        acc += acf(insample, k).powi(2);
    }
    let limit = 1.645 * ((1.0 + 2.0 * acc) / t).sqrt();
    acf(insample, m).abs() > limit
}

/// Seasonal indices by classical multiplicative decomposition: detrend with
/// a centered moving average, average the ratios per phase, normalize the
/// indices to mean 1. Returns `None` when the decomposition degenerates
/// (non-positive trend or indices), in which case the caller treats the
/// series as non-seasonal.
fn seasonal_indices(x: &[f64], m: usize) -> Option<Vec<f64>> {
    let n = x.len();
    if n < m + 1 {
        return None;
    }
    // Centered moving average; even periods use the standard 2xm average
    // with half weights at the ends.
    let half = m / 2;
    let mut ratio_sums = vec![0.0f64; m];
    let mut ratio_counts = vec![0usize; m];
    for t in half..n.checked_sub(half)? {
        let ma = if m % 2 == 0 {
            let mut acc = 0.5 * x[t - half] + 0.5 * x[t + half];
            for j in (t - half + 1)..(t + half) {
                acc += x[j];
            }
            acc / m as f64
        } else {
            let mut acc = 0.0;
            for j in (t - half)..=(t + half) {
                acc += x[j];
            }
            acc / m as f64
        };
        if !(ma > 0.0) {
            return None;
        }
        ratio_sums[t % m] += x[t] / ma;
        ratio_counts[t % m] += 1;
    }
    if ratio_counts.iter().any(|&c| c == 0) {
        return None;
    }
    let mut si: Vec<f64> = ratio_sums
        .iter()
        .zip(&ratio_counts)
        .map(|(s, &c)| s / c as f64)
        .collect();
    let mean = si.iter().sum::<f64>() / m as f64;
    if !(mean > 0.0) || si.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return None;
    }
    for v in si.iter_mut() {
        *v /= mean;
    }
    Some(si)
}

/// Seasonally adjusted naive forecast: deseasonalize when the seasonality
/// test fires, carry the last deseasonalized level forward, reseasonalize.
/// With `m == 1` this is exactly the naive forecast.
pub fn naive2(insample: &[f64], m: usize, h: usize) -> Result<Vec<f64>> {
    if insample.is_empty() {
        return Err(Error::InsufficientHistory {
            what: "naive2",
            needed: 1,
            got: 0,
        });
    }
    if m <= 1 || !seasonality_test(insample, m) {
        return naive(insample, h);
    }
    let Some(si) = seasonal_indices(insample, m) else {
        return naive(insample, h);
    };
    let n = insample.len();
    let last_des = insample[n - 1] / si[(n - 1) % m];
    Ok((0..h).map(|i| last_des * si[(n + i) % m]).collect())
}
