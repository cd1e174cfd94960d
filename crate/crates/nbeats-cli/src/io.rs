//! Forecast file reading/writing: comma-separated `id,h1..hH` rows with a
//! header sized to the longest horizon; rows may be shorter for series
//! with smaller horizons.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};

pub fn write_forecasts(forecasts: &BTreeMap<String, Vec<f64>>, path: &Path) -> Result<()> {
    let max_h = forecasts.values().map(|f| f.len()).max().unwrap_or(0);
    let mut out = std::io::BufWriter::new(
        std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?,
    );
    write!(out, "id")?;
    for i in 1..=max_h {
        write!(out, ",h{i}")?;
    }
    writeln!(out)?;
    for (id, f) in forecasts {
        write!(out, "{id}")?;
        for v in f {
            write!(out, ",{v}")?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_forecasts(path: &Path) -> Result<BTreeMap<String, Vec<f64>>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading forecasts {}", path.display()))?;
    let mut out = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let id = fields.next().unwrap_or_default().trim().to_string();
        if lineno == 0 && id == "id" {
            continue; // header
        }
        if id.is_empty() {
            bail!("{}:{}: empty series id", path.display(), lineno + 1);
        }
        let values: Vec<f64> = fields
            .map(|f| f.trim())
            .take_while(|f| !f.is_empty())
            .map(|f| {
                f.parse::<f64>().map_err(|_| {
                    anyhow::anyhow!("{}:{}: non-numeric cell {f:?}", path.display(), lineno + 1)
                })
            })
            .collect::<Result<_>>()?;
        if out.insert(id.clone(), values).is_some() {
            bail!("{}: duplicate id {id}", path.display());
        }
    }
    Ok(out)
}
