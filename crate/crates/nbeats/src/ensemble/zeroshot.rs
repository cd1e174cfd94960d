//! Applying trained members to datasets: native forecasting, horizon
//! adaptation by truncation or iterated re-forecasting, and zero-shot
//! routing onto unseen datasets.

use std::collections::BTreeMap;

use crate::data::Dataset;
use crate::ensemble::{Ensemble, ForecastSet, HeadPooling, Member, Regime, Vote};
use crate::error::{Error, Result};

/// Produce a forecast of exactly `h_tgt` steps from a forecaster with some
/// native horizon: truncate when the native forecast is long enough,
/// otherwise iteratively append the forecast to the history and re-forecast
/// until enough steps accumulate, then truncate.
pub fn adapt_horizon(
    history: &[f64],
    h_tgt: usize,
    mut forecast: impl FnMut(&[f64]) -> Result<Vec<f64>>,
) -> Result<Vec<f64>> {
    let mut extended = history.to_vec();
    let mut produced: Vec<f64> = Vec::new();
    while produced.len() < h_tgt {
        let step = forecast(&extended)?;
        if step.is_empty() {
            return Err(Error::InvalidConfig("forecaster returned no values".into()));
        }
        extended.extend_from_slice(&step);
        produced.extend_from_slice(&step);
    }
    produced.truncate(h_tgt);
    Ok(produced)
}

/// Forecast the train segments of a dataset with every routed member at its
/// native horizon. Series horizons must match the member horizon.
pub fn forecast_dataset(ens: &Ensemble, ds: &Dataset) -> Result<ForecastSet> {
    apply(ens, ds, None)
}

/// Zero-shot application under a regime: `R_O` adapts mismatched horizons
/// (truncation or autoregressive extension); `R_SH`/`R_SH_LT` members must
/// already match the target horizon.
pub fn zero_shot_apply(ens: &Ensemble, target: &Dataset, regime: Regime) -> Result<ForecastSet> {
    apply(ens, target, Some(regime))
}

fn apply(ens: &Ensemble, ds: &Dataset, regime: Option<Regime>) -> Result<ForecastSet> {
    let mut votes: BTreeMap<(usize, usize), BTreeMap<String, Vec<f64>>> = BTreeMap::new();
    for freq in ds.frequencies() {
        let indices = ds.by_frequency(freq);
        let members = ens.members_for(freq)?;
        // Group series by target horizon (datasets may mix horizons within
        // a frequency in principle; competition files do not).
        let mut by_horizon: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for &i in &indices {
            by_horizon.entry(ds.series[i].horizon).or_default().push(i);
        }
        for (h_tgt, group) in by_horizon {
            for member in &members {
                forecast_group(member, ds, &group, h_tgt, regime, &mut votes)?;
            }
        }
    }
    let fs = ForecastSet {
        votes: votes
            .into_iter()
            .map(|((member, head), forecasts)| Vote {
                member,
                head,
                forecasts,
            })
            .collect(),
    };
    Ok(match ens.spec.head_pooling {
        HeadPooling::Votes => fs,
        HeadPooling::MemberMedian => fs.pooled_per_member(),
    })
}

fn forecast_group(
    member: &Member,
    ds: &Dataset,
    group: &[usize],
    h_tgt: usize,
    regime: Option<Regime>,
    votes: &mut BTreeMap<(usize, usize), BTreeMap<String, Vec<f64>>>,
) -> Result<()> {
    let h_src = member.meta.horizon;
    let scale_mode = member.meta.scale_mode;
    let adapt = h_src != h_tgt;
    if adapt {
        match regime {
            Some(Regime::RO) => {}
            _ => {
                return Err(Error::HorizonMismatch {
                    member: member.meta.index,
                    target: h_tgt,
                });
            }
        }
    }

    if !adapt {
        // Native horizon: batch the whole group per member.
        let histories: Vec<&[f64]> = group.iter().map(|&i| ds.train_values(i)).collect();
        let all = member.model.forecast_batch(&histories, scale_mode)?;
        for (&i, per_head) in group.iter().zip(all) {
            for (head, forecast) in per_head.into_iter().enumerate() {
                votes
                    .entry((member.meta.index, head))
                    .or_default()
                    .insert(ds.series[i].id.clone(), forecast);
            }
        }
        return Ok(());
    }

    // Horizon adaptation: every head extends autoregressively on its own
    // forecasts, with the window scale recomputed over the extended
    // history on each invocation.
    for &i in group {
        let history = ds.train_values(i);
        for head in 0..member.model.heads() {
            let adapted = adapt_horizon(history, h_tgt, |hist| {
                Ok(member.model.forecast_heads(hist, scale_mode)?[head].clone())
            })?;
            votes
                .entry((member.meta.index, head))
                .or_default()
                .insert(ds.series[i].id.clone(), adapted);
        }
    }
    Ok(())
}
