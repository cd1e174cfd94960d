pub mod apply;
pub mod evaluate;
pub mod forecast;
pub mod params;
pub mod train;

use std::path::PathBuf;

use anyhow::{Context, Result};

use nbeats::data::{load_dataset, Dataset};
use nbeats::ensemble::ForecastSet;

/// Load and hold out the last horizon of every series, logging exclusions.
pub fn load_split_dataset(values: &PathBuf, meta: &PathBuf) -> Result<Dataset> {
    let ds = load_dataset(values, meta)
        .with_context(|| format!("loading dataset {}", values.display()))?;
    let (ds, excluded) = ds.train_test_split();
    if !excluded.is_empty() {
        log::warn!("{} series too short for their horizon, excluded", excluded.len());
    }
    Ok(ds)
}

/// Write one csv per vote under `dir` for diversity diagnostics.
pub fn write_member_forecasts(fs: &ForecastSet, dir: &PathBuf) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for vote in &fs.votes {
        let path = dir.join(format!(
            "member_{:04}_head_{}.csv",
            vote.member, vote.head
        ));
        crate::io::write_forecasts(&vote.forecasts, &path)?;
    }
    Ok(())
}
