//! Ensemble persistence: a directory with `manifest.json` plus one model
//! container per member, integrity-checked by sha256.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ensemble::{plan_members, Ensemble, EnsembleSpec, Member, MemberMeta};
use crate::error::{Error, Result};
use crate::model::AnyModel;

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Manifest {
    format_version: u32,
    master_seed: u64,
    spec: EnsembleSpec,
    members: Vec<MemberRecord>,
}

#[derive(Serialize, Deserialize)]
struct MemberRecord {
    file: String,
    sha256: String,
    #[serde(flatten)]
    meta: MemberMeta,
}

fn hex(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        s.push_str(&format!("{b:02x}"));
    }
    s
}

fn file_digest(path: &Path) -> Result<String> {
    let bytes = fs::read(path)?;
    Ok(hex(&Sha256::digest(&bytes)))
}

/// Write `manifest.json` plus one container per member into `dir`.
pub fn save_ensemble(ens: &Ensemble, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let mut records = Vec::with_capacity(ens.members.len());
    for member in &ens.members {
        let file = format!("member_{:04}.nbm", member.meta.index);
        let path = dir.join(&file);
        member.model.save(&path)?;
        records.push(MemberRecord {
            sha256: file_digest(&path)?,
            file,
            meta: member.meta.clone(),
        });
    }
    let manifest = Manifest {
        format_version: MANIFEST_VERSION,
        master_seed: ens.master_seed,
        spec: ens.spec.clone(),
        members: records,
    };
    fs::write(
        dir.join("manifest.json"),
        serde_json::to_vec_pretty(&manifest)?,
    )?;
    Ok(())
}

/// Load an ensemble directory, verifying the manifest version, the member
/// grid against the spec, and each member file's checksum.
pub fn load_ensemble(dir: impl AsRef<Path>) -> Result<Ensemble> {
    let dir = dir.as_ref();
    let manifest: Manifest = serde_json::from_slice(&fs::read(dir.join("manifest.json"))?)?;
    if manifest.format_version != MANIFEST_VERSION {
        return Err(Error::VersionMismatch {
            found: manifest.format_version,
            expected: MANIFEST_VERSION,
        });
    }
    // The manifest must describe a subset of the spec's grid (members may
    // be missing when some failed during training, never inconsistent).
    let plans = plan_members(&manifest.spec, manifest.master_seed)?;
    for record in &manifest.members {
        let plan = plans.get(record.meta.index).ok_or_else(|| {
            Error::InvalidConfig(format!(
                "manifest member {} is outside the spec grid",
                record.meta.index
            ))
        })?;
        if plan.frequency != record.meta.frequency
            || plan.loss != record.meta.loss
            || plan.repeat != record.meta.repeat
            || plan.lookback != record.meta.lookback
            || plan.train.seed != record.meta.seed
        {
            return Err(Error::InvalidConfig(format!(
                "manifest member {} does not match the spec grid",
                record.meta.index
            )));
        }
    }
    let mut members = Vec::with_capacity(manifest.members.len());
    for record in &manifest.members {
        let path = dir.join(&record.file);
        if !path.exists() {
            return Err(Error::ModelFormat {
                path: path.display().to_string(),
                msg: format!("missing member file for member {}", record.meta.index),
            });
        }
        if file_digest(&path)? != record.sha256 {
            return Err(Error::ChecksumMismatch {
                member: record.file.clone(),
            });
        }
        members.push(Member {
            meta: record.meta.clone(),
            model: AnyModel::load(&path)?,
        });
    }
    if members.is_empty() {
        return Err(Error::NoMembers);
    }
    Ok(Ensemble {
        spec: manifest.spec,
        master_seed: manifest.master_seed,
        members,
    })
}
