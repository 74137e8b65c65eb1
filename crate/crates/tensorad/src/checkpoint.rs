//! Named parameter checkpoints: a JSON manifest next to a little-endian
//! `f64` blob.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Result, TensorError};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ManifestEntry {
    pub name: String,
    pub shape: Vec<usize>,
    /// Offset into the blob, in elements.
    pub offset: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Manifest {
    pub format: String,
    pub entries: Vec<ManifestEntry>,
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub meta: serde_json::Value,
}

pub const FORMAT_TAG: &str = "tensorad-f64le-v1";

pub fn manifest_path(stem: &Path) -> PathBuf {
    stem.with_extension("json")
}

pub fn blob_path(stem: &Path) -> PathBuf {
    stem.with_extension("bin")
}

pub fn encode(named: &[(String, Tensor)], meta: serde_json::Value) -> (Manifest, Vec<u8>) {
    let mut entries = Vec::with_capacity(named.len());
    let mut blob = Vec::new();
    let mut offset = 0;
    for (name, t) in named {
        entries.push(ManifestEntry {
            name: name.clone(),
            shape: t.shape().to_vec(),
            offset,
        });
        for v in t.data() {
            blob.extend_from_slice(&v.to_le_bytes());
        }
        offset += t.numel();
    }
    let manifest = Manifest {
        format: FORMAT_TAG.to_string(),
        entries,
        meta,
    };
    (manifest, blob)
}

pub fn decode(manifest: &Manifest, blob: &[u8]) -> Result<Vec<(String, Tensor)>> {
    if manifest.format != FORMAT_TAG {
        return Err(TensorError::Checkpoint(format!("unknown format {:?}", manifest.format)));
    }
    if !blob.len().is_multiple_of(8) {
        return Err(TensorError::Checkpoint("blob length is not a multiple of 8".into()));
    }
    let values: Vec<f64> = blob
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    manifest
        .entries
        .iter()
        .map(|e| {
            let n: usize = e.shape.iter().product();
            let end = e.offset + n;
            if end > values.len() {
                return Err(TensorError::Checkpoint(format!("entry {} overruns the blob", e.name)));
            }
            Ok((e.name.clone(), Tensor::new(&e.shape, values[e.offset..end].to_vec())?))
        })
        .collect()
}

/// Writes `<stem>.json` and `<stem>.bin`.
pub fn save(stem: &Path, named: &[(String, Tensor)], meta: serde_json::Value) -> Result<()> {
    let (manifest, blob) = encode(named, meta);
    fs::write(manifest_path(stem), serde_json::to_vec_pretty(&manifest)?)?;
    fs::write(blob_path(stem), blob)?;
    Ok(())
}

pub fn load(stem: &Path) -> Result<(Manifest, Vec<(String, Tensor)>)> {
    let manifest: Manifest = serde_json::from_slice(&fs::read(manifest_path(stem))?)?;
    let blob = fs::read(blob_path(stem))?;
    let named = decode(&manifest, &blob)?;
    Ok((manifest, named))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_truncated_blob() {
        let named = vec![("w".to_string(), Tensor::from_vec(vec![1.0, 2.0]))];
        let (manifest, blob) = encode(&named, serde_json::Value::Null);
        assert!(decode(&manifest, &blob[..8]).is_err());
        let back = decode(&manifest, &blob).unwrap();
        assert_eq!(back[0].1.data(), &[1.0, 2.0]);
    }
}
