//! Shared builders for the benchmarks.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use nbeats::data::{Dataset, Frequency, TimeSeries};
use nbeats::model::{build_model, LookbackGrid, ModelConfig, ParallelModel};

/// A mid-sized generic model: 8 stacks, width 64, the standard 6-head grid.
pub fn bench_model(h: usize) -> ParallelModel<f64> {
    let grid = LookbackGrid::from_horizon(h);
    build_model(&ModelConfig::generic_sized(8, 64), &grid, 1).unwrap()
}

/// Random positive histories, one per series.
pub fn bench_histories(n: usize, len: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| (0..len).map(|_| rng.random_range(1.0..100.0)).collect())
        .collect()
}

/// A small synthetic yearly dataset for training-loop benchmarks.
pub fn bench_dataset(n: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Dataset::new(
        (0..n)
            .map(|i| {
                let len = rng.random_range(25..45usize);
                let drift = rng.random_range(0.1..0.9);
                TimeSeries {
                    id: format!("Y{i}"),
                    values: (0..len).map(|t| 20.0 + drift * t as f64).collect(),
                    frequency: Frequency::Yearly,
                    m: 1,
                    horizon: 6,
                }
            })
            .collect(),
    )
}
