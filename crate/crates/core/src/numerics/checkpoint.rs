//! Two-file checkpoints: a JSON manifest plus a sibling payload of
//! little-endian `f64` values in manifest order.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::tensor::Tensor;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamEntry {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointManifest {
    pub seed: u64,
    pub config_hash: String,
    pub config: serde_json::Value,
    /// Payload file name, relative to the manifest's directory.
    pub payload: String,
    pub params: Vec<ParamEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub manifest: CheckpointManifest,
    pub tensors: Vec<Tensor>,
}

/// Hex SHA-256 of the compact JSON form of `config`.
pub fn config_hash(config: &serde_json::Value) -> String {
    let digest = Sha256::digest(config.to_string().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn payload_path(manifest_path: &Path, payload: &str) -> PathBuf {
    manifest_path.parent().unwrap_or(Path::new(".")).join(payload)
}

fn invalid(msg: String) -> std::io::Error {
    std::io::Error::new(std::io::ErrorKind::InvalidData, msg)
}

/// Writes `manifest_path` and its payload next to it.
pub fn write_checkpoint(manifest_path: &Path, ckpt: &Checkpoint) -> std::io::Result<()> {
    let m = &ckpt.manifest;
    if m.params.len() != ckpt.tensors.len()
        || m.params.iter().zip(&ckpt.tensors).any(|(e, t)| (e.rows, e.cols) != t.shape())
    {
        return Err(invalid("manifest does not describe the tensors".into()));
    }
    let mut bytes = Vec::with_capacity(ckpt.tensors.iter().map(|t| t.len() * 8).sum());
    for t in &ckpt.tensors {
        for x in t.data() {
            bytes.extend_from_slice(&x.to_le_bytes());
        }
    }
    fs::write(payload_path(manifest_path, &m.payload), bytes)?;
    fs::write(manifest_path, serde_json::to_vec_pretty(m).map_err(|e| invalid(e.to_string()))?)
}

pub fn read_checkpoint(manifest_path: &Path) -> std::io::Result<Checkpoint> {
    let manifest: CheckpointManifest =
        serde_json::from_slice(&fs::read(manifest_path)?).map_err(|e| invalid(format!("manifest: {e}")))?;
    if config_hash(&manifest.config) != manifest.config_hash {
        return Err(invalid("config hash does not match the stored config".into()));
    }
    let bytes = fs::read(payload_path(manifest_path, &manifest.payload))?;
    let expected: usize = manifest.params.iter().map(|e| e.rows * e.cols * 8).sum();
    if bytes.len() != expected {
        return Err(invalid(format!("payload holds {} bytes, manifest needs {expected}", bytes.len())));
    }
    let mut values = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap()));
    let mut tensors = Vec::with_capacity(manifest.params.len());
    for e in &manifest.params {
        let data: Vec<f64> = values.by_ref().take(e.rows * e.cols).collect();
        tensors.push(Tensor::from_vec(e.rows, e.cols, data).map_err(|err| invalid(err.to_string()))?);
    }
    Ok(Checkpoint { manifest, tensors })
}
