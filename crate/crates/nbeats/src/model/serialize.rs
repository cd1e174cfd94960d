//! Model container files: a JSON header (format version, config, grid,
//! seed, precision) followed by the raw parameter arrays as little-endian
//! 64-bit floats in declaration order. Round trips are bit-exact.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::grid::LookbackGrid;
use crate::model::network::{build_model, load_params_from, ParallelModel};
use crate::model::ModelConfig;
use crate::tensor::Scalar;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    format_version: u32,
    precision_bits: u32,
    config: ModelConfig,
    grid: LookbackGrid,
    seed: u64,
    param_count: usize,
}

fn format_err(path: &Path, msg: impl Into<String>) -> Error {
    Error::ModelFormat {
        path: path.display().to_string(),
        msg: msg.into(),
    }
}

/// Write a model container.
pub fn save_model<T: Scalar>(model: &ParallelModel<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let params = model.params();
    let header = Header {
        format_version: FORMAT_VERSION,
        precision_bits: T::BITS,
        config: model.config().clone(),
        grid: model.grid().clone(),
        seed: model.seed(),
        param_count: params.iter().map(|p| p.len()).sum(),
    };
    let header_bytes = serde_json::to_vec(&header)?;
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(&(header_bytes.len() as u32).to_le_bytes())?;
    out.write_all(&header_bytes)?;
    for p in params {
        for v in p.data() {
            out.write_all(&v.as_f64().to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

fn read_header(reader: &mut impl Read, path: &Path) -> Result<Header> {
    let mut len_bytes = [0u8; 4];
    reader
        .read_exact(&mut len_bytes)
        .map_err(|_| format_err(path, "truncated header length"))?;
    let len = u32::from_le_bytes(len_bytes) as usize;
    let mut header_bytes = vec![0u8; len];
    reader
        .read_exact(&mut header_bytes)
        .map_err(|_| format_err(path, "truncated header"))?;
    let header: Header = serde_json::from_slice(&header_bytes)
        .map_err(|e| format_err(path, format!("bad header: {e}")))?;
    if header.format_version != FORMAT_VERSION {
        return Err(Error::VersionMismatch {
            found: header.format_version,
            expected: FORMAT_VERSION,
        });
    }
    Ok(header)
}

/// Load a model container at a known precision. Fails if the file was saved
/// at a different precision.
pub fn load_model<T: Scalar>(path: impl AsRef<Path>) -> Result<ParallelModel<T>> {
    let path = path.as_ref();
    let mut reader = BufReader::new(File::open(path)?);
    let header = read_header(&mut reader, path)?;
    if header.precision_bits != T::BITS {
        return Err(format_err(
            path,
            format!(
                "precision is {} bits, requested {}",
                header.precision_bits,
                T::BITS
            ),
        ));
    }
    read_body(header, &mut reader, path)
}

fn read_body<T: Scalar>(
    header: Header,
    reader: &mut impl Read,
    path: &Path,
) -> Result<ParallelModel<T>> {
    let mut model = build_model::<T>(&header.config, &header.grid, header.seed)?;
    let mut remaining = header.param_count;
    load_params_from(&mut model, |len| {
        if len > remaining {
            return Err(format_err(path, "parameter payload too short"));
        }
        remaining -= len;
        let mut buf = vec![0u8; len * 8];
        reader
            .read_exact(&mut buf)
            .map_err(|_| format_err(path, "truncated parameter payload"))?;
        Ok(buf
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    })?;
    if remaining != 0 {
        return Err(format_err(path, "parameter count does not match topology"));
    }
    Ok(model)
}

/// A model at either precision, as stored on disk.
#[derive(Clone, Debug)]
pub enum AnyModel {
    F64(ParallelModel<f64>),
    F32(ParallelModel<f32>),
}

impl AnyModel {
    /// Load whichever precision the container declares.
    pub fn load(path: impl AsRef<Path>) -> Result<AnyModel> {
        let path = path.as_ref();
        let mut reader = BufReader::new(File::open(path)?);
        let header = read_header(&mut reader, path)?;
        match header.precision_bits {
            64 => Ok(AnyModel::F64(read_body(header, &mut reader, path)?)),
            32 => Ok(AnyModel::F32(read_body(header, &mut reader, path)?)),
            bits => Err(format_err(path, format!("unsupported precision {bits}"))),
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        match self {
            AnyModel::F64(m) => save_model(m, path),
            AnyModel::F32(m) => save_model(m, path),
        }
    }

    pub fn horizon(&self) -> usize {
        match self {
            AnyModel::F64(m) => m.horizon(),
            AnyModel::F32(m) => m.horizon(),
        }
    }

    pub fn heads(&self) -> usize {
        match self {
            AnyModel::F64(m) => m.heads(),
            AnyModel::F32(m) => m.heads(),
        }
    }

    pub fn grid(&self) -> &LookbackGrid {
        match self {
            AnyModel::F64(m) => m.grid(),
            AnyModel::F32(m) => m.grid(),
        }
    }

    pub fn count_parameters(&self) -> usize {
        match self {
            AnyModel::F64(m) => m.count_parameters(),
            AnyModel::F32(m) => m.count_parameters(),
        }
    }

    /// Per-head forecasts in original units.
    pub fn forecast_heads(&self, history: &[f64], mode: crate::data::ScaleMode) -> Result<Vec<Vec<f64>>> {
        match self {
            AnyModel::F64(m) => m.forecast_heads(history, mode),
            AnyModel::F32(m) => m.forecast_heads(history, mode),
        }
    }

    /// Batched per-head forecasts in original units: `[series][head][h]`.
    pub fn forecast_batch(
        &self,
        histories: &[&[f64]],
        mode: crate::data::ScaleMode,
    ) -> Result<Vec<Vec<Vec<f64>>>> {
        match self {
            AnyModel::F64(m) => m.forecast_batch(histories, mode),
            AnyModel::F32(m) => m.forecast_batch(histories, mode),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{single_stack_config, BasisKind};

    #[test]
    fn round_trip_is_bit_exact() {
        let grid = LookbackGrid::from_horizon(4);
        let cfg = single_stack_config(BasisKind::Generic { dim_f: 3, dim_b: 3 }, 8, 2);
        let model = build_model::<f64>(&cfg, &grid, 42).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.nbm");
        save_model(&model, &path).unwrap();
        let loaded = load_model::<f64>(&path).unwrap();
        assert_eq!(model, loaded);
    }

    #[test]
    fn round_trip_f32() {
        let grid = LookbackGrid::from_horizon(3);
        let cfg = single_stack_config(BasisKind::Seasonal, 8, 1);
        let model = build_model::<f32>(&cfg, &grid, 9).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.nbm");
        save_model(&model, &path).unwrap();
        let loaded = load_model::<f32>(&path).unwrap();
        assert_eq!(model, loaded);
        assert!(matches!(AnyModel::load(&path).unwrap(), AnyModel::F32(_)));
    }

    #[test]
    fn version_mismatch_is_detected() {
        let grid = LookbackGrid::from_horizon(3);
        let cfg = single_stack_config(BasisKind::Trend { degree: 1 }, 4, 1);
        let model = build_model::<f64>(&cfg, &grid, 1).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.nbm");
        save_model(&model, &path).unwrap();

        // Bump the version field in place.
        let bytes = std::fs::read(&path).unwrap();
        let len = u32::from_le_bytes(bytes[..4].try_into().unwrap()) as usize;
        let mut header: serde_json::Value = serde_json::from_slice(&bytes[4..4 + len]).unwrap();
        header["format_version"] = serde_json::json!(99);
        let new_header = serde_json::to_vec(&header).unwrap();
        let mut patched = (new_header.len() as u32).to_le_bytes().to_vec();
        patched.extend_from_slice(&new_header);
        patched.extend_from_slice(&bytes[4 + len..]);
        std::fs::write(&path, patched).unwrap();

        assert!(matches!(
            load_model::<f64>(&path),
            Err(Error::VersionMismatch { found: 99, .. })
        ));
    }

    #[test]
    fn truncated_payload_is_detected() {
        let grid = LookbackGrid::from_horizon(3);
        let cfg = single_stack_config(BasisKind::Trend { degree: 1 }, 4, 1);
        let model = build_model::<f64>(&cfg, &grid, 1).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.nbm");
        save_model(&model, &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 9]).unwrap();
        assert!(matches!(
            load_model::<f64>(&path),
            Err(Error::ModelFormat { .. })
        ));
    }
}
