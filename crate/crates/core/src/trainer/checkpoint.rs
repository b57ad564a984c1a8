//! Binary checkpoints.
//!
//! Layout: magic `INTSEQCK`, `u32` format version, `u64` header length, JSON
//! header, little-endian `f32` tensors (parameters, then the AdamW first and
//! second moments when present), and a SHA-256 digest of everything before it.

use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::optim::{AdamW, AdamWConfig};
use super::TrainConfig;
use crate::model::{ConfigError, Layout, Model, ModelConfig, ParamStore};

const MAGIC: &[u8; 8] = b"INTSEQCK";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("not a checkpoint (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    Version(u32),
    #[error("checkpoint digest mismatch; file is corrupt or truncated")]
    Digest,
    #[error("malformed checkpoint: {0}")]
    Malformed(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub shape: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub model: ModelConfig,
    pub train: Option<TrainConfig>,
    /// Completed epochs.
    pub epoch: usize,
    /// Completed optimizer updates.
    pub step: u64,
    pub tensors: Vec<TensorEntry>,
    pub has_moments: bool,
}

#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub header: CheckpointHeader,
    pub params: ParamStore<f32>,
    pub moments: Option<(ParamStore<f32>, ParamStore<f32>)>,
}

impl Checkpoint {
    pub fn from_model(model: &Model<f32>) -> Self {
        Self {
            header: CheckpointHeader {
                model: model.config.clone(),
                train: None,
                epoch: 0,
                step: 0,
                tensors: tensor_entries(&model.layout),
                has_moments: false,
            },
            params: model.params.clone(),
            moments: None,
        }
    }

    pub fn model(&self) -> Result<Model<f32>, CheckpointError> {
        Ok(Model::with_params(self.header.model.clone(), self.params.clone())?)
    }

    pub fn optimizer(&self, config: AdamWConfig) -> Option<AdamW<f32>> {
        self.moments.as_ref().map(|(m, v)| AdamW { config, step: self.header.step, m: m.clone(), v: v.clone() })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let header = serde_json::to_vec(&self.header).expect("header serializes");
        let mut out = Vec::with_capacity(24 + header.len() + 4 * self.params.numel() * 3 + 32);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(header.len() as u64).to_le_bytes());
        out.extend_from_slice(&header);
        let mut put = |store: &ParamStore<f32>| {
            for x in store.data.iter().flatten() {
                out.extend_from_slice(&x.to_le_bytes());
            }
        };
        put(&self.params);
        if let Some((m, v)) = &self.moments {
            put(m);
            put(v);
        }
        let digest = Sha256::digest(&out);
        out.extend_from_slice(&digest);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CheckpointError> {
        if bytes.len() < 20 + 32 || &bytes[..8] != MAGIC {
            return Err(CheckpointError::BadMagic);
        }
        let (body, digest) = bytes.split_at(bytes.len() - 32);
        if Sha256::digest(body).as_slice() != digest {
            return Err(CheckpointError::Digest);
        }
        let version = u32::from_le_bytes(body[8..12].try_into().expect("4 bytes"));
        if version != FORMAT_VERSION {
            return Err(CheckpointError::Version(version));
        }
        let hlen = u64::from_le_bytes(body[12..20].try_into().expect("8 bytes")) as usize;
        let payload_start = 20usize.checked_add(hlen).filter(|&e| e <= body.len());
        let payload_start = payload_start.ok_or_else(|| CheckpointError::Malformed("header length".into()))?;
        let header: CheckpointHeader =
            serde_json::from_slice(&body[20..payload_start]).map_err(|e| CheckpointError::Malformed(e.to_string()))?;
        header.model.validate()?;
        let layout = Layout::new(&header.model);
        if header.tensors != tensor_entries(&layout) {
            return Err(CheckpointError::Malformed("tensor table does not match the model configuration".into()));
        }
        let mut payload = body[payload_start..].chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap()));
        let numel = layout.param_count();
        let copies = if header.has_moments { 3 } else { 1 };
        if body.len() - payload_start != 4 * numel * copies {
            return Err(CheckpointError::Malformed("payload size".into()));
        }
        let mut take = || {
            let mut store = ParamStore::<f32>::zeros(&layout);
            for slot in &mut store.data {
                for x in slot.iter_mut() {
                    *x = payload.next().expect("size checked");
                }
            }
            store
        };
        let params = take();
        let moments = header.has_moments.then(|| {
            let m = take();
            (m, take())
        });
        Ok(Self { header, params, moments })
    }

    pub fn save(&self, path: &Path) -> Result<(), CheckpointError> {
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, self.to_bytes())?;
        fs::rename(tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, CheckpointError> {
        Self::from_bytes(&fs::read(path)?)
    }
}

pub fn tensor_entries(layout: &Layout) -> Vec<TensorEntry> {
    layout.specs.iter().map(|s| TensorEntry { name: s.name.clone(), shape: s.shape.clone() }).collect()
}
