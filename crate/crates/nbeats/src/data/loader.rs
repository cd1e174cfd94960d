//! Loading and writing the competition-style dataset files.
//!
//! Values file: one series per line, `id,v1,v2,...`, oldest value first,
//! trailing empty cells tolerated (the public M4 train/test files have them).
//! Metadata file: csv with header `id,frequency,horizon,m`.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::data::{enforced_seasonality, Dataset, Frequency, TimeSeries};
use crate::error::{Error, Result};

struct MetaEntry {
    frequency: Frequency,
    horizon: usize,
    m: usize,
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line,
        msg: msg.into(),
    }
}

fn read_meta(path: &Path) -> Result<HashMap<String, MetaEntry>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| parse_err(path, 0, e.to_string()))?;
    {
        let headers = reader
            .headers()
            .map_err(|e| parse_err(path, 1, e.to_string()))?;
        let expected = ["id", "frequency", "horizon", "m"];
        let got: Vec<String> = headers.iter().map(|h| h.to_ascii_lowercase()).collect();
        if got != expected {
            return Err(parse_err(
                path,
                1,
                format!("metadata header must be id,frequency,horizon,m, got {got:?}"),
            ));
        }
    }
    let mut meta = HashMap::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| parse_err(path, line, e.to_string()))?;
        if record.len() < 4 {
            return Err(parse_err(path, line, "expected 4 fields"));
        }
        let id = record[0].to_string();
        let frequency = Frequency::parse(&record[1])
            .ok_or_else(|| parse_err(path, line, format!("unknown frequency {:?}", &record[1])))?;
        let horizon: usize = record[2]
            .parse()
            .map_err(|_| parse_err(path, line, format!("bad horizon {:?}", &record[2])))?;
        let meta_m: usize = record[3]
            .parse()
            .map_err(|_| parse_err(path, line, format!("bad m {:?}", &record[3])))?;
        if horizon == 0 {
            return Err(parse_err(path, line, "horizon must be at least 1"));
        }
        let m = enforced_seasonality(frequency, meta_m)?;
        if meta.insert(id.clone(), MetaEntry { frequency, horizon, m }).is_some() {
            return Err(Error::DuplicateId { id });
        }
    }
    Ok(meta)
}

/// Load a dataset from a values file plus its metadata file. Every values
/// row must have a metadata entry; metadata entries without values are
/// ignored.
pub fn load_dataset(values_path: impl AsRef<Path>, meta_path: impl AsRef<Path>) -> Result<Dataset> {
    let values_path = values_path.as_ref();
    let meta = read_meta(meta_path.as_ref())?;

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(values_path)
        .map_err(|e| parse_err(values_path, 0, e.to_string()))?;

    let mut series = Vec::new();
    let mut seen: HashMap<String, ()> = HashMap::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 1;
        let record = record.map_err(|e| parse_err(values_path, line, e.to_string()))?;
        let mut fields = record.iter();
        let Some(id) = fields.next() else { continue };
        if id.is_empty() {
            continue;
        }
        let id = id.to_string();
        if seen.insert(id.clone(), ()).is_some() {
            return Err(Error::DuplicateId { id });
        }
        let entry = meta
            .get(&id)
            .ok_or_else(|| Error::UnknownId { id: id.clone() })?;
        let mut values = Vec::new();
        let mut tail_reached = false;
        for field in fields {
            if field.is_empty() {
                tail_reached = true;
                continue;
            }
            if tail_reached {
                return Err(parse_err(
                    values_path,
                    line,
                    format!("series {id}: value after an empty cell"),
                ));
            }
            let v: f64 = field.parse().map_err(|_| {
                parse_err(values_path, line, format!("non-numeric cell {field:?}"))
            })?;
            if !v.is_finite() {
                return Err(parse_err(
                    values_path,
                    line,
                    format!("non-finite value in series {id}"),
                ));
            }
            values.push(v);
        }
        if values.is_empty() {
            return Err(Error::EmptySeries { id });
        }
        series.push(TimeSeries {
            id,
            values,
            frequency: entry.frequency,
            m: entry.m,
            horizon: entry.horizon,
        });
    }
    Ok(Dataset::new(series))
}

/// Write the values file for `ds` (full series, ignoring any split).
pub fn write_values(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for s in &ds.series {
        write!(out, "{}", s.id)?;
        for v in &s.values {
            write!(out, ",{v}")?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

/// Write the metadata file for `ds`.
pub fn write_meta(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "id,frequency,horizon,m")?;
    for s in &ds.series {
        writeln!(out, "{},{},{},{}", s.id, s.frequency, s.horizon, s.m)?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write as _;

    fn write_files(values: &str, meta: &str) -> (tempfile::TempDir, std::path::PathBuf, std::path::PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let vp = dir.path().join("values.csv");
        let mp = dir.path().join("meta.csv");
        let mut f = File::create(&vp).unwrap();
        f.write_all(values.as_bytes()).unwrap();
        let mut f = File::create(&mp).unwrap();
        f.write_all(meta.as_bytes()).unwrap();
        (dir, vp, mp)
    }

    #[test]
    fn parses_simple_rows() {
        let (_d, vp, mp) = write_files(
            "Y1,5,6,7\n",
            "id,frequency,horizon,m\nY1,Yearly,6,1\n",
        );
        let ds = load_dataset(&vp, &mp).unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.series[0].values, vec![5.0, 6.0, 7.0]);
        assert_eq!(ds.series[0].horizon, 6);
        assert_eq!(ds.series[0].m, 1);
    }

    #[test]
    fn trailing_empty_cells_are_ignored() {
        let (_d, vp, mp) = write_files(
            "Q7,1,2,,\n",
            "id,frequency,horizon,m\nQ7,Quarterly,8,4\n",
        );
        let ds = load_dataset(&vp, &mp).unwrap();
        assert_eq!(ds.series[0].values, vec![1.0, 2.0]);
    }

    #[test]
    fn hourly_seasonality_is_enforced() {
        // Metadata claims m=5; the hourly convention of 24 wins.
        let (_d, vp, mp) = write_files(
            "H1,1,2,3\n",
            "id,frequency,horizon,m\nH1,Hourly,48,5\n",
        );
        let ds = load_dataset(&vp, &mp).unwrap();
        assert_eq!(ds.series[0].m, 24);
    }

    #[test]
    fn unknown_id_is_an_error() {
        let (_d, vp, mp) = write_files(
            "Y1,1,2\nY2,3,4\n",
            "id,frequency,horizon,m\nY1,Yearly,6,1\n",
        );
        assert!(matches!(
            load_dataset(&vp, &mp),
            Err(Error::UnknownId { id }) if id == "Y2"
        ));
    }

    #[test]
    fn non_numeric_cell_is_an_error() {
        let (_d, vp, mp) = write_files(
            "Y1,1,banana\n",
            "id,frequency,horizon,m\nY1,Yearly,6,1\n",
        );
        assert!(matches!(load_dataset(&vp, &mp), Err(Error::Parse { .. })));
    }

    #[test]
    fn duplicate_id_is_an_error() {
        let (_d, vp, mp) = write_files(
            "Y1,1,2\nY1,3,4\n",
            "id,frequency,horizon,m\nY1,Yearly,6,1\n",
        );
        assert!(matches!(
            load_dataset(&vp, &mp),
            Err(Error::DuplicateId { .. })
        ));
    }

    #[test]
    fn round_trip_preserves_numeric_content() {
        let (_d, vp, mp) = write_files(
            "Y1,5.25,6.5,7.125\nM3,0.1,0.2,0.30000000000000004\n",
            "id,frequency,horizon,m\nY1,Yearly,6,1\nM3,Monthly,18,12\n",
        );
        let ds = load_dataset(&vp, &mp).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let vp2 = dir.path().join("v.csv");
        let mp2 = dir.path().join("m.csv");
        write_values(&ds, &vp2).unwrap();
        write_meta(&ds, &mp2).unwrap();
        let ds2 = load_dataset(&vp2, &mp2).unwrap();
        assert_eq!(ds.series, ds2.series);
    }
}
