//! Dataset-level evaluation: per-series metrics, per-frequency aggregates
//! with OWA against NAIVE2, coverage, ensemble-diversity correlation, and
//! rolling-origin evaluation.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::metrics::baselines::naive2;
use crate::metrics::{coverage, mape, mase, mda, nd, owa, smape};

/// Metrics of one series.
#[derive(Clone, Debug, Serialize)]
pub struct SeriesMetrics {
    pub id: String,
    pub frequency: String,
    pub smape: f64,
    pub mase: f64,
    pub mape: f64,
    pub nd: f64,
    pub mda: f64,
    /// Per-series OWA where the per-series NAIVE2 reference is nonzero.
    pub owa: Option<f64>,
    pub naive2_smape: f64,
    pub naive2_mase: f64,
}

/// Aggregates over one frequency split (or the weighted average row).
#[derive(Clone, Debug, Serialize)]
pub struct SplitMetrics {
    pub split: String,
    pub count: usize,
    pub smape: f64,
    pub mase: f64,
    pub mape: f64,
    pub nd: f64,
    pub mda: f64,
    /// OWA of aggregate SMAPE/MASE against the aggregate NAIVE2 reference.
    pub owa: f64,
    /// Fraction of series with MASE below the threshold.
    pub coverage: f64,
    pub naive2_smape: f64,
    pub naive2_mase: f64,
}

/// Full evaluation result.
#[derive(Clone, Debug, Serialize)]
pub struct MetricReport {
    pub per_series: Vec<SeriesMetrics>,
    pub splits: Vec<SplitMetrics>,
    /// Count-weighted aggregate over all splits.
    pub average: SplitMetrics,
    /// Mean and standard deviation of pairwise member error correlations,
    /// when per-member forecasts were available.
    pub correlation: Option<(f64, f64)>,
    pub coverage_tau: f64,
}

impl MetricReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Split-level table as csv.
    pub fn splits_csv(&self) -> String {
        let mut out = String::from(
            "split,count,smape,mase,mape,nd,mda,owa,coverage,naive2_smape,naive2_mase\n",
        );
        for s in self.splits.iter().chain(std::iter::once(&self.average)) {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{}\n",
                s.split,
                s.count,
                s.smape,
                s.mase,
                s.mape,
                s.nd,
                s.mda,
                s.owa,
                s.coverage,
                s.naive2_smape,
                s.naive2_mase
            ));
        }
        out
    }

    /// Per-series metrics as csv (for coverage plots and friends).
    pub fn per_series_csv(&self) -> String {
        let mut out =
            String::from("id,frequency,smape,mase,mape,nd,mda,owa,naive2_smape,naive2_mase\n");
        for s in &self.per_series {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                s.id,
                s.frequency,
                s.smape,
                s.mase,
                s.mape,
                s.nd,
                s.mda,
                s.owa.map(|v| v.to_string()).unwrap_or_default(),
                s.naive2_smape,
                s.naive2_mase
            ));
        }
        out
    }
}

fn mean(values: impl Iterator<Item = f64>, count: usize) -> f64 {
    if count == 0 {
        return 0.0;
    }
    values.sum::<f64>() / count as f64
}

fn aggregate(label: String, rows: &[&SeriesMetrics], tau: f64) -> Result<SplitMetrics> {
    let count = rows.len();
    let smape_m = mean(rows.iter().map(|r| r.smape), count);
    let mase_m = mean(rows.iter().map(|r| r.mase), count);
    let n2_smape = mean(rows.iter().map(|r| r.naive2_smape), count);
    let n2_mase = mean(rows.iter().map(|r| r.naive2_mase), count);
    let mase_values: Vec<f64> = rows.iter().map(|r| r.mase).collect();
    Ok(SplitMetrics {
        split: label,
        count,
        smape: smape_m,
        mase: mase_m,
        mape: mean(rows.iter().map(|r| r.mape), count),
        nd: mean(rows.iter().map(|r| r.nd), count),
        mda: mean(rows.iter().map(|r| r.mda), count),
        owa: owa(smape_m, mase_m, n2_smape, n2_mase)?,
        coverage: coverage(&mase_values, tau),
        naive2_smape: n2_smape,
        naive2_mase: n2_mase,
    })
}

/// Evaluate combined forecasts against the held-out segments of a split
/// dataset. Every series in the dataset must have a forecast of horizon
/// length; NAIVE2 references are computed from the train segments.
pub fn evaluate_forecasts(
    ds: &Dataset,
    forecasts: &BTreeMap<String, Vec<f64>>,
    tau: f64,
) -> Result<MetricReport> {
    if !ds.has_split() {
        return Err(Error::InvalidConfig(
            "evaluation needs a dataset with a train/test split".into(),
        ));
    }
    let mut per_series = Vec::with_capacity(ds.len());
    for (i, s) in ds.series.iter().enumerate() {
        let forecast = forecasts.get(&s.id).ok_or(Error::MissingSeries {
            id: s.id.clone(),
            place: "forecast file",
        })?;
        let insample = ds.train_values(i);
        let actual = ds.test_values(i);
        if forecast.len() != actual.len() {
            return Err(Error::ShapeMismatch {
                op: "evaluate",
                lhs: vec![forecast.len()],
                rhs: vec![actual.len()],
            });
        }
        let reference = naive2(insample, s.m, s.horizon)?;
        let n2_smape = smape(&s.id, &reference, actual)?;
        let n2_mase = mase(&s.id, &reference, actual, insample, s.m)?;
        let s_smape = smape(&s.id, forecast, actual)?;
        let s_mase = mase(&s.id, forecast, actual, insample, s.m)?;
        let series_owa = if n2_smape > 0.0 && n2_mase > 0.0 {
            Some(0.5 * (s_smape / n2_smape + s_mase / n2_mase))
        } else {
            None
        };
        per_series.push(SeriesMetrics {
            id: s.id.clone(),
            frequency: s.frequency.name().to_string(),
            smape: s_smape,
            mase: s_mase,
            mape: mape(&s.id, forecast, actual)?,
            nd: nd(&s.id, forecast, actual)?,
            mda: mda(forecast, actual, *insample.last().unwrap())?,
            owa: series_owa,
            naive2_smape: n2_smape,
            naive2_mase: n2_mase,
        });
    }

    let mut splits = Vec::new();
    for freq in ds.frequencies() {
        let rows: Vec<&SeriesMetrics> = per_series
            .iter()
            .filter(|r| r.frequency == freq.name())
            .collect();
        splits.push(aggregate(freq.name().to_string(), &rows, tau)?);
    }
    let all: Vec<&SeriesMetrics> = per_series.iter().collect();
    let average = aggregate("Average".to_string(), &all, tau)?;
    Ok(MetricReport {
        per_series,
        splits,
        average,
        correlation: None,
        coverage_tau: tau,
    })
}

/// Pearson correlation; errors out on constant inputs.
fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma).powi(2);
        vb += (y - mb).powi(2);
    }
    if va == 0.0 || vb == 0.0 {
        return Err(Error::UndefinedMetric {
            metric: "correlation",
            id: String::new(),
            reason: "constant error sequence".into(),
        });
    }
    Ok(cov / (va.sqrt() * vb.sqrt()))
}

/// Pairwise correlation of per-point absolute percentage errors between
/// members; returns the mean and standard deviation over pairs.
///
/// `member_forecasts[k]` maps series id to member `k`'s forecast; actuals
/// come from the dataset's test segments.
pub fn member_residual_correlation(
    member_forecasts: &[BTreeMap<String, Vec<f64>>],
    ds: &Dataset,
) -> Result<(f64, f64)> {
    if member_forecasts.len() < 2 {
        return Err(Error::InvalidConfig(
            "residual correlation needs at least two members".into(),
        ));
    }
    // Per member: flattened APE vector over (series, step) in dataset order.
    let mut ape: Vec<Vec<f64>> = Vec::with_capacity(member_forecasts.len());
    for member in member_forecasts {
        let mut errs = Vec::new();
        for (i, s) in ds.series.iter().enumerate() {
            let forecast = member.get(&s.id).ok_or(Error::MissingSeries {
                id: s.id.clone(),
                place: "member forecasts",
            })?;
            for (f, a) in forecast.iter().zip(ds.test_values(i)) {
                if *a == 0.0 {
                    return Err(Error::UndefinedMetric {
                        metric: "APE",
                        id: s.id.clone(),
                        reason: "zero actual".into(),
                    });
                }
                errs.push(100.0 * (f - a).abs() / a.abs());
            }
        }
        ape.push(errs);
    }
    let mut cors = Vec::new();
    for i in 0..ape.len() {
        for j in (i + 1)..ape.len() {
            cors.push(pearson(&ape[i], &ape[j])?);
        }
    }
    let mean_c = cors.iter().sum::<f64>() / cors.len() as f64;
    let var = cors.iter().map(|c| (c - mean_c).powi(2)).sum::<f64>() / cors.len() as f64;
    Ok((mean_c, var.sqrt()))
}

/// Metrics of one rolling-origin window.
#[derive(Clone, Debug, Serialize)]
pub struct WindowMetrics {
    pub origin: usize,
    pub smape: f64,
    pub mase: f64,
    pub mape: f64,
    pub nd: f64,
    pub mda: f64,
}

/// Rolling-origin evaluation result: per-window metrics and their means.
#[derive(Clone, Debug, Serialize)]
pub struct RollingReport {
    pub windows: Vec<WindowMetrics>,
    pub smape: f64,
    pub mase: f64,
    pub mape: f64,
    pub nd: f64,
    pub mda: f64,
}

/// Evaluate a forecaster at `n_windows` successive origins spaced `stride`
/// apart, the last origin sitting `horizon` before the series end. The
/// report averages the per-window metrics.
pub fn rolling_origin_eval(
    id: &str,
    values: &[f64],
    m: usize,
    horizon: usize,
    stride: usize,
    n_windows: usize,
    mut forecast_at: impl FnMut(&[f64]) -> Result<Vec<f64>>,
) -> Result<RollingReport> {
    if n_windows == 0 {
        return Err(Error::InvalidConfig("n_windows must be at least 1".into()));
    }
    let needed = horizon + (n_windows - 1) * stride + 1;
    if values.len() < needed {
        return Err(Error::InsufficientHistory {
            what: "rolling-origin evaluation",
            needed,
            got: values.len(),
        });
    }
    let mut windows = Vec::with_capacity(n_windows);
    for k in 0..n_windows {
        let origin = values.len() - horizon - (n_windows - 1 - k) * stride;
        let history = &values[..origin];
        let actual = &values[origin..(origin + horizon).min(values.len())];
        let forecast = forecast_at(history)?;
        if forecast.len() < actual.len() {
            return Err(Error::ShapeMismatch {
                op: "rolling forecast",
                lhs: vec![forecast.len()],
                rhs: vec![actual.len()],
            });
        }
        let forecast = &forecast[..actual.len()];
        windows.push(WindowMetrics {
            origin,
            smape: smape(id, forecast, actual)?,
            mase: mase(id, forecast, actual, history, m)?,
            mape: mape(id, forecast, actual)?,
            nd: nd(id, forecast, actual)?,
            mda: mda(forecast, actual, *history.last().unwrap())?,
        });
    }
    let n = windows.len();
    Ok(RollingReport {
        smape: mean(windows.iter().map(|w| w.smape), n),
        mase: mean(windows.iter().map(|w| w.mase), n),
        mape: mean(windows.iter().map(|w| w.mape), n),
        nd: mean(windows.iter().map(|w| w.nd), n),
        mda: mean(windows.iter().map(|w| w.mda), n),
        windows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Frequency, TimeSeries};

    fn dataset(n_series: usize, len: usize, horizon: usize) -> Dataset {
        let series = (0..n_series)
            .map(|i| TimeSeries {
                id: format!("Y{i}"),
                values: (0..len)
                    .map(|t| 50.0 + (i + 1) as f64 * 0.7 * t as f64 + ((t * 7 + i) % 5) as f64)
                    .collect(),
                frequency: Frequency::Yearly,
                m: 1,
                horizon,
            })
            .collect();
        let (ds, _) = Dataset::new(series).train_test_split();
        ds
    }

    #[test]
    fn naive2_forecasts_score_owa_exactly_one() {
        let ds = dataset(20, 30, 6);
        let mut forecasts = BTreeMap::new();
        for (i, s) in ds.series.iter().enumerate() {
            forecasts.insert(
                s.id.clone(),
                naive2(ds.train_values(i), s.m, s.horizon).unwrap(),
            );
        }
        let report = evaluate_forecasts(&ds, &forecasts, 1.0).unwrap();
        assert_eq!(report.average.owa, 1.0);
        for split in &report.splits {
            assert_eq!(split.owa, 1.0);
        }
    }

    #[test]
    fn perfect_forecasts_score_zero() {
        let ds = dataset(5, 30, 6);
        let mut forecasts = BTreeMap::new();
        for (i, s) in ds.series.iter().enumerate() {
            forecasts.insert(s.id.clone(), ds.test_values(i).to_vec());
        }
        let report = evaluate_forecasts(&ds, &forecasts, 1.0).unwrap();
        assert_eq!(report.average.smape, 0.0);
        assert_eq!(report.average.mase, 0.0);
        assert_eq!(report.average.owa, 0.0);
        assert_eq!(report.average.coverage, 1.0);
        assert_eq!(report.average.mda, 1.0);
    }

    #[test]
    fn missing_series_is_named() {
        let ds = dataset(2, 30, 6);
        let forecasts = BTreeMap::new();
        let err = evaluate_forecasts(&ds, &forecasts, 1.0).unwrap_err();
        assert!(err.to_string().contains("Y0"), "{err}");
    }

    #[test]
    fn duplicated_member_correlates_perfectly() {
        let ds = dataset(4, 30, 6);
        let mut member = BTreeMap::new();
        for (i, s) in ds.series.iter().enumerate() {
            let f: Vec<f64> = ds.test_values(i).iter().map(|v| v * 1.1).collect();
            member.insert(s.id.clone(), f);
        }
        let (mean_c, std_c) =
            member_residual_correlation(&[member.clone(), member], &ds).unwrap();
        assert!((mean_c - 1.0).abs() < 1e-12);
        assert_eq!(std_c, 0.0);
    }

    #[test]
    fn anticorrelated_members_have_negative_correlation() {
        let ds = dataset(1, 40, 6);
        let actual = ds.test_values(0).to_vec();
        // Member A's APE rises over the horizon, member B's falls.
        let mut a = BTreeMap::new();
        let mut b = BTreeMap::new();
        let fa: Vec<f64> = actual
            .iter()
            .enumerate()
            .map(|(i, v)| v * (1.0 + 0.01 * (i + 1) as f64))
            .collect();
        let fb: Vec<f64> = actual
            .iter()
            .enumerate()
            .map(|(i, v)| v * (1.0 + 0.01 * (actual.len() - i) as f64))
            .collect();
        a.insert(ds.series[0].id.clone(), fa);
        b.insert(ds.series[0].id.clone(), fb);
        let (mean_c, _) = member_residual_correlation(&[a, b], &ds).unwrap();
        assert!(mean_c < 0.0, "{mean_c}");
    }

    #[test]
    fn fewer_than_two_members_is_an_error() {
        let ds = dataset(1, 30, 6);
        assert!(member_residual_correlation(&[BTreeMap::new()], &ds).is_err());
    }

    #[test]
    fn rolling_single_window_equals_single_split() {
        let values: Vec<f64> = (0..40).map(|t| 10.0 + 1.3 * t as f64 + ((t % 3) as f64)).collect();
        let h = 6;
        let report = rolling_origin_eval("s", &values, 1, h, h, 1, |hist| {
            Ok(vec![*hist.last().unwrap(); h])
        })
        .unwrap();
        assert_eq!(report.windows.len(), 1);
        let origin = values.len() - h;
        let expected = smape(
            "s",
            &vec![values[origin - 1]; h],
            &values[origin..],
        )
        .unwrap();
        assert_eq!(report.smape, expected);
    }

    #[test]
    fn rolling_two_disjoint_windows() {
        let values: Vec<f64> = (0..40).map(|t| 10.0 + t as f64).collect();
        let h = 6;
        let report = rolling_origin_eval("s", &values, 1, h, h, 2, |hist| {
            Ok(vec![*hist.last().unwrap(); h])
        })
        .unwrap();
        assert_eq!(report.windows.len(), 2);
        assert_eq!(report.windows[0].origin + h, report.windows[1].origin);
        // The report is the mean of the per-window metrics.
        let m = (report.windows[0].smape + report.windows[1].smape) / 2.0;
        assert_eq!(report.smape, m);
    }

    #[test]
    fn rolling_rejects_short_series() {
        let values = vec![1.0; 10];
        assert!(matches!(
            rolling_origin_eval("s", &values, 1, 6, 6, 2, |_| Ok(vec![1.0; 6])),
            Err(Error::InsufficientHistory { .. })
        ));
    }
}
