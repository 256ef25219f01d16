//! Checkpoint format: a JSON manifest (name, shape, byte offset per
//! tensor, version, SHA-256 of the blob) next to a raw little-endian
//! float32 blob.

use crate::{NnError, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct NamedTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TensorMeta {
    pub name: String,
    pub shape: Vec<usize>,
    /// Byte offset into the blob.
    pub offset: u64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CheckpointManifest {
    pub version: u32,
    pub blob_sha256: String,
    pub tensors: Vec<TensorMeta>,
}

fn paths(base: &Path) -> (PathBuf, PathBuf) {
    (base.with_extension("json"), base.with_extension("bin"))
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> NnError + '_ {
    move |source| NnError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Hash of the blob this tensor set would serialize to. Doubles as the
/// model identity in provenance fields.
pub fn tensors_sha256(tensors: &[NamedTensor]) -> String {
    let mut hasher = Sha256::new();
    for t in tensors {
        for v in &t.data {
            hasher.update((*v as f32).to_le_bytes());
        }
    }
    hex::encode(hasher.finalize())
}

/// Write `<base>.json` + `<base>.bin`.
pub fn save_tensors(tensors: &[NamedTensor], base: &Path) -> Result<CheckpointManifest> {
    let mut blob: Vec<u8> = Vec::new();
    let mut metas = Vec::with_capacity(tensors.len());
    for t in tensors {
        debug_assert_eq!(t.shape.iter().product::<usize>(), t.data.len());
        metas.push(TensorMeta {
            name: t.name.clone(),
            shape: t.shape.clone(),
            offset: blob.len() as u64,
        });
        for v in &t.data {
            blob.extend_from_slice(&(*v as f32).to_le_bytes());
        }
    }
    let manifest = CheckpointManifest {
        version: CHECKPOINT_VERSION,
        blob_sha256: hex::encode(Sha256::digest(&blob)),
        tensors: metas,
    };

    let (json_path, bin_path) = paths(base);
    if let Some(parent) = base.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(io_err(base))?;
        }
    }
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    std::fs::write(&json_path, text).map_err(io_err(&json_path))?;
    std::fs::write(&bin_path, blob).map_err(io_err(&bin_path))?;
    Ok(manifest)
}

/// Read a checkpoint pair back into named f64 tensors.
pub fn load_tensors(base: &Path) -> Result<(CheckpointManifest, Vec<NamedTensor>)> {
    let (json_path, bin_path) = paths(base);
    let text = std::fs::read_to_string(&json_path).map_err(io_err(&json_path))?;
    let manifest: CheckpointManifest = serde_json::from_str(&text)?;
    let blob = std::fs::read(&bin_path).map_err(io_err(&bin_path))?;

    let actual = hex::encode(Sha256::digest(&blob));
    if actual != manifest.blob_sha256 {
        return Err(NnError::ChecksumMismatch {
            expected: manifest.blob_sha256.clone(),
            actual,
        });
    }

    let mut tensors = Vec::with_capacity(manifest.tensors.len());
    for meta in &manifest.tensors {
        let len: usize = meta.shape.iter().product();
        let start = meta.offset as usize;
        let end = start + len * 4;
        if end > blob.len() {
            return Err(NnError::BlobSizeMismatch {
                expected: end,
                actual: blob.len(),
            });
        }
        let data: Vec<f64> = blob[start..end]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect();
        tensors.push(NamedTensor {
            name: meta.name.clone(),
            shape: meta.shape.clone(),
            data,
        });
    }
    Ok((manifest, tensors))
}
