//! Series containers, dataset loading, train/test splitting and scaling.

mod loader;
mod scaling;

pub use loader::{load_dataset, write_meta, write_values};
pub use scaling::{scale_factor, scale_windows, unscale_forecast, ScaleMode};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Observation frequency of a series. Determines the seasonality period `m`
/// used by the scaled error metrics and the seasonal baselines.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub enum Frequency {
    Yearly,
    Quarterly,
    Monthly,
    Weekly,
    Daily,
    Hourly,
    Other,
}

impl Frequency {
    pub const ALL: [Frequency; 6] = [
        Frequency::Yearly,
        Frequency::Quarterly,
        Frequency::Monthly,
        Frequency::Weekly,
        Frequency::Daily,
        Frequency::Hourly,
    ];

    /// Seasonality period in samples: 12 for monthly, 4 for quarterly, 24
    /// for hourly, 1 otherwise.
    pub fn seasonality(self) -> usize {
        match self {
            Frequency::Monthly => 12,
            Frequency::Quarterly => 4,
            Frequency::Hourly => 24,
            _ => 1,
        }
    }

    /// The M4 competition horizon for this frequency (M3 convention for
    /// `Other`).
    pub fn default_horizon(self) -> usize {
        match self {
            Frequency::Yearly => 6,
            Frequency::Quarterly => 8,
            Frequency::Monthly => 18,
            Frequency::Weekly => 13,
            Frequency::Daily => 14,
            Frequency::Hourly => 48,
            Frequency::Other => 8,
        }
    }

    pub fn parse(s: &str) -> Option<Frequency> {
        match s.trim().to_ascii_lowercase().as_str() {
            "yearly" | "y" => Some(Frequency::Yearly),
            "quarterly" | "q" => Some(Frequency::Quarterly),
            "monthly" | "m" => Some(Frequency::Monthly),
            "weekly" | "w" => Some(Frequency::Weekly),
            "daily" | "d" => Some(Frequency::Daily),
            "hourly" | "h" => Some(Frequency::Hourly),
            "other" | "o" => Some(Frequency::Other),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Frequency::Yearly => "Yearly",
            Frequency::Quarterly => "Quarterly",
            Frequency::Monthly => "Monthly",
            Frequency::Weekly => "Weekly",
            Frequency::Daily => "Daily",
            Frequency::Hourly => "Hourly",
            Frequency::Other => "Other",
        }
    }
}

impl std::fmt::Display for Frequency {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// One identified series, oldest observation first.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries {
    pub id: String,
    pub values: Vec<f64>,
    pub frequency: Frequency,
    /// Seasonality period in samples.
    pub m: usize,
    /// Forecast horizon in samples.
    pub horizon: usize,
}

impl TimeSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// A collection of series with an optional per-series train/test boundary.
/// When a split is present, the test segment of every series is exactly its
/// horizon long.
#[derive(Clone, Debug, Default)]
pub struct Dataset {
    pub series: Vec<TimeSeries>,
    split: Option<Vec<usize>>,
}

impl Dataset {
    pub fn new(series: Vec<TimeSeries>) -> Self {
        Dataset { series, split: None }
    }

    pub fn len(&self) -> usize {
        self.series.len()
    }

    pub fn is_empty(&self) -> bool {
        self.series.is_empty()
    }

    pub fn has_split(&self) -> bool {
        self.split.is_some()
    }

    /// Training portion of series `i` (everything when no split is set).
    pub fn train_values(&self, i: usize) -> &[f64] {
        match &self.split {
            Some(split) => &self.series[i].values[..split[i]],
            None => &self.series[i].values,
        }
    }

    /// Held-out portion of series `i` (empty when no split is set).
    pub fn test_values(&self, i: usize) -> &[f64] {
        match &self.split {
            Some(split) => &self.series[i].values[split[i]..],
            None => &[],
        }
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.series.iter().position(|s| s.id == id)
    }

    /// Indices of the series observed at `freq`.
    pub fn by_frequency(&self, freq: Frequency) -> Vec<usize> {
        (0..self.series.len())
            .filter(|&i| self.series[i].frequency == freq)
            .collect()
    }

    /// Frequencies present in the dataset, deduplicated, in enum order.
    pub fn frequencies(&self) -> Vec<Frequency> {
        let mut freqs: Vec<Frequency> = self.series.iter().map(|s| s.frequency).collect();
        freqs.sort();
        freqs.dedup();
        freqs
    }

    /// Hold out the last `horizon` observations of every series. Series that
    /// are too short to leave any training history are dropped and reported;
    /// a warning is logged for each.
    pub fn train_test_split(self) -> (Dataset, Vec<String>) {
        let mut kept = Vec::with_capacity(self.series.len());
        let mut split = Vec::with_capacity(self.series.len());
        let mut excluded = Vec::new();
        for s in self.series {
            if s.len() > s.horizon {
                split.push(s.len() - s.horizon);
                kept.push(s);
            } else {
                log::warn!(
                    "excluding series {}: length {} does not exceed horizon {}",
                    s.id,
                    s.len(),
                    s.horizon
                );
                excluded.push(s.id);
            }
        }
        (
            Dataset {
                series: kept,
                split: Some(split),
            },
            excluded,
        )
    }
}

/// Validate and fix the seasonality of a parsed series: standard frequencies
/// carry their fixed period, `Other` keeps whatever the metadata says.
pub(crate) fn enforced_seasonality(frequency: Frequency, meta_m: usize) -> Result<usize> {
    match frequency {
        Frequency::Other => {
            if meta_m == 0 {
                Err(Error::InvalidConfig(
                    "seasonality m must be at least 1".into(),
                ))
            } else {
                Ok(meta_m)
            }
        }
        f => Ok(f.seasonality()),
    }
}
