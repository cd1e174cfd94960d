//! Evaluation metrics. These evaluate the published formulas exactly —
//! undefined denominators raise instead of being epsilon-guarded, so
//! reported numbers are never silently perturbed.

pub mod baselines;
pub mod report;

pub use baselines::{naive, naive2, seasonality_test, snaive};
pub use report::{
    evaluate_forecasts, member_residual_correlation, rolling_origin_eval, MetricReport,
    RollingReport, SeriesMetrics, SplitMetrics,
};

use crate::error::{Error, Result};

fn check_lengths(metric: &'static str, forecast: &[f64], actual: &[f64]) -> Result<()> {
    if forecast.len() != actual.len() || forecast.is_empty() {
        return Err(Error::ShapeMismatch {
            op: metric,
            lhs: vec![forecast.len()],
            rhs: vec![actual.len()],
        });
    }
    Ok(())
}

fn undefined(metric: &'static str, id: &str, reason: impl Into<String>) -> Error {
    Error::UndefinedMetric {
        metric,
        id: id.to_string(),
        reason: reason.into(),
    }
}

/// Mean absolute percentage error, `100/H * sum |f - a| / |a|`.
pub fn mape(id: &str, forecast: &[f64], actual: &[f64]) -> Result<f64> {
    check_lengths("mape", forecast, actual)?;
    let mut acc = 0.0;
    for (f, a) in forecast.iter().zip(actual) {
        if *a == 0.0 {
            return Err(undefined("MAPE", id, "zero actual in denominator"));
        }
        acc += (f - a).abs() / a.abs();
    }
    Ok(100.0 * acc / actual.len() as f64)
}

/// Symmetric MAPE, `200/H * sum |f - a| / (|a| + |f|)`.
pub fn smape(id: &str, forecast: &[f64], actual: &[f64]) -> Result<f64> {
    check_lengths("smape", forecast, actual)?;
    let mut acc = 0.0;
    for (f, a) in forecast.iter().zip(actual) {
        let num = (f - a).abs();
        let den = a.abs() + f.abs();
        if den == 0.0 {
            if num == 0.0 {
                continue; // 0/0 term: both zero, contributes nothing
            }
            return Err(undefined("SMAPE", id, "zero denominator"));
        }
        acc += num / den;
    }
    Ok(200.0 * acc / actual.len() as f64)
}

/// Mean absolute scaled error: forecast MAE over the in-sample seasonal
/// naive mean absolute difference at lag `m`.
pub fn mase(id: &str, forecast: &[f64], actual: &[f64], insample: &[f64], m: usize) -> Result<f64> {
    check_lengths("mase", forecast, actual)?;
    if insample.len() <= m {
        return Err(Error::InsufficientHistory {
            what: "MASE insample",
            needed: m + 1,
            got: insample.len(),
        });
    }
    let mut den = 0.0;
    for t in m..insample.len() {
        den += (insample[t] - insample[t - m]).abs();
    }
    den /= (insample.len() - m) as f64;
    if den == 0.0 {
        return Err(undefined("MASE", id, "constant in-sample history"));
    }
    let mae = forecast
        .iter()
        .zip(actual)
        .map(|(f, a)| (f - a).abs())
        .sum::<f64>()
        / actual.len() as f64;
    Ok(mae / den)
}

/// Normalized deviation, `sum |f - a| / sum |a|`.
pub fn nd(id: &str, forecast: &[f64], actual: &[f64]) -> Result<f64> {
    check_lengths("nd", forecast, actual)?;
    let den: f64 = actual.iter().map(|a| a.abs()).sum();
    if den == 0.0 {
        return Err(undefined("ND", id, "all-zero actuals"));
    }
    let num: f64 = forecast.iter().zip(actual).map(|(f, a)| (f - a).abs()).sum();
    Ok(num / den)
}

/// Mean directional accuracy: the fraction of steps whose direction of
/// change from the last known value matches. `sign(0)` is its own class.
pub fn mda(forecast: &[f64], actual: &[f64], last_known: f64) -> Result<f64> {
    check_lengths("mda", forecast, actual)?;
    let hits = forecast
        .iter()
        .zip(actual)
        .filter(|(f, a)| {
            let sf = (*f - last_known).partial_cmp(&0.0);
            let sa = (*a - last_known).partial_cmp(&0.0);
            sf == sa
        })
        .count();
    Ok(hits as f64 / actual.len() as f64)
}

/// Overall weighted average of SMAPE and MASE ratios against the NAIVE2
/// baseline, computed on aggregate metrics.
pub fn owa(model_smape: f64, model_mase: f64, naive2_smape: f64, naive2_mase: f64) -> Result<f64> {
    if naive2_smape == 0.0 || naive2_mase == 0.0 {
        return Err(undefined("OWA", "", "zero NAIVE2 reference metric"));
    }
    Ok(0.5 * (model_smape / naive2_smape + model_mase / naive2_mase))
}

/// Fraction of series with MASE strictly below the threshold `tau`.
pub fn coverage(mase_values: &[f64], tau: f64) -> f64 {
    if mase_values.is_empty() {
        return 0.0;
    }
    mase_values.iter().filter(|&&v| v < tau).count() as f64 / mase_values.len() as f64
}
