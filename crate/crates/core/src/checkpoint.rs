//! Single-file model checkpoints.
//!
//! Layout: magic `MRCK`, `u32` format version, `u64` header length, the JSON
//! header, then every parameter as little-endian `f32` in manifest order.
//! Manifest offsets are byte offsets into that trailing blob.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::datamodel::{LabelPreset, RelationLabel};
use crate::encoder::{Vocab, VocabError};
use crate::model::{Model, ModelConfig, ModelError};
use crate::numerics::Tensor;

pub const MAGIC: &[u8; 4] = b"MRCK";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("not a checkpoint (magic {0:?})")]
    BadMagic(Vec<u8>),
    #[error("unsupported checkpoint version {0}")]
    Version(u32),
    #[error("checkpoint truncated: {0}")]
    Truncated(String),
    #[error("checkpoint header: {0}")]
    Header(#[from] serde_json::Error),
    #[error("parameter `{name}`: {message}")]
    Param { name: String, message: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Vocab(#[from] VocabError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub offset: u64,
}

/// Training metadata stored alongside the weights.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub labels: Vec<RelationLabel>,
    pub preset: LabelPreset,
    pub seed: u64,
    pub steps: u64,
    /// Hash of the checkpoint the encoder was initialized from, if any.
    pub init_encoder_sha256: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct Header {
    config: ModelConfig,
    #[serde(flatten)]
    meta: CheckpointMeta,
    /// Non-reserved vocabulary entries in id order.
    vocab: Vec<String>,
    manifest: Vec<ParamEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn to_bytes(model: &Model, meta: &CheckpointMeta) -> Vec<u8> {
    let mut manifest = Vec::new();
    let mut blob = Vec::new();
    for (name, t) in model.params.iter() {
        manifest.push(ParamEntry {
            name: name.clone(),
            shape: t.shape().to_vec(),
            offset: blob.len() as u64,
        });
        for &v in t.data() {
            blob.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    let header = Header {
        config: model.config.clone(),
        meta: meta.clone(),
        vocab: model.vocab.entries().to_vec(),
        manifest,
    };
    let json = serde_json::to_vec(&header).expect("header serializes");
    let mut out = Vec::with_capacity(16 + json.len() + blob.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    out.extend_from_slice(&blob);
    out
}

pub fn from_bytes(bytes: &[u8]) -> Result<(Model, CheckpointMeta), CheckpointError> {
    if bytes.len() < 16 {
        return Err(CheckpointError::Truncated("missing preamble".into()));
    }
    if &bytes[0..4] != MAGIC {
        return Err(CheckpointError::BadMagic(bytes[0..4].to_vec()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(CheckpointError::Version(version));
    }
    let hlen = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let blob_start = 16usize
        .checked_add(hlen)
        .filter(|&e| e <= bytes.len())
        .ok_or_else(|| CheckpointError::Truncated("header".into()))?;
    let header: Header = serde_json::from_slice(&bytes[16..blob_start])?;
    let blob = &bytes[blob_start..];
    let vocab = Vocab::from_tokens(header.vocab.iter().cloned())?;
    // Initializing with any seed yields the expected names and shapes.
    let mut model = Model::new(header.config.clone(), vocab, 0)?;
    let expected = model.params.len();
    if header.manifest.len() != expected {
        return Err(CheckpointError::Param {
            name: "*".into(),
            message: format!(
                "manifest lists {} tensors, model has {expected}",
                header.manifest.len()
            ),
        });
    }
    for e in &header.manifest {
        let shape = model
            .params
            .get(&e.name)
            .map(|t| t.shape().to_vec())
            .ok_or_else(|| CheckpointError::Param {
                name: e.name.clone(),
                message: "not part of this model".into(),
            })?;
        if shape != e.shape {
            return Err(CheckpointError::Param {
                name: e.name.clone(),
                message: format!("shape {:?}, expected {shape:?}", e.shape),
            });
        }
        let n: usize = shape.iter().product();
        let start = e.offset as usize;
        let end = start + 4 * n;
        if end > blob.len() {
            return Err(CheckpointError::Truncated(e.name.clone()));
        }
        let data = blob[start..end]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect();
        let t = Tensor::new(shape, data).map_err(|err| CheckpointError::Param {
            name: e.name.clone(),
            message: err.to_string(),
        })?;
        model.params.insert(e.name.clone(), t);
    }
    Ok((model, header.meta))
}

/// Writes the checkpoint and returns its SHA-256.
pub fn save_checkpoint(
    path: &Path,
    model: &Model,
    meta: &CheckpointMeta,
) -> Result<String, CheckpointError> {
    let bytes = to_bytes(model, meta);
    fs::write(path, &bytes).map_err(|source| CheckpointError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(sha256_hex(&bytes))
}

/// Loads a checkpoint, also returning the SHA-256 of the file.
pub fn load_checkpoint(path: &Path) -> Result<(Model, CheckpointMeta, String), CheckpointError> {
    let bytes = fs::read(path).map_err(|source| CheckpointError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let (model, meta) = from_bytes(&bytes)?;
    Ok((model, meta, sha256_hex(&bytes)))
}

/// Rounds every parameter to `f32`, matching what a save/load cycle yields.
pub fn round_to_storage(model: &mut Model) {
    for (_, t) in model.params.iter_mut() {
        for v in t.data_mut() {
            *v = *v as f32 as f64;
        }
    }
}
