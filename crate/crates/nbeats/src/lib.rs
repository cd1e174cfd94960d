//! Parallel multi-head N-BEATS for univariate time-series forecasting.
//!
//! The crate implements the classic doubly-residual basis-expansion network
//! and its parallel multi-head variant in which up to `W` models with
//! different lookback windows share one trunk and train simultaneously. On
//! top of the network it provides bagged ensemble training, median forecast
//! combination, zero-shot application to unseen datasets, and the M4-style
//! metric suite (SMAPE, MASE, OWA against a seasonally adjusted naive
//! baseline, and friends).

pub mod data;
pub mod ensemble;
pub mod error;
pub mod metrics;
pub mod model;
pub mod tensor;
pub mod training;

pub use data::{Dataset, Frequency, ScaleMode, TimeSeries};
pub use ensemble::{Ensemble, EnsembleSpec, ForecastSet, LookbackMode, LossKind, Regime};
pub use error::{Error, Result};
pub use metrics::MetricReport;
pub use model::{BasisKind, LookbackGrid, ModelConfig, ParallelModel};
pub use tensor::{Scalar, Tensor};
pub use training::TrainConfig;
