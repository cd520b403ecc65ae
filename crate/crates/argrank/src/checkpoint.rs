//! Binary checkpoint of a trained leg.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! b"EVCK"  u32 version  u32 tensor_count
//! per tensor: u32 name_len, name (UTF-8), u32 rank, rank × u64 dims, f32 payload
//! u64 FNV-1a of every preceding byte
//! ```
//!
//! Besides the leg parameters, three `meta.*` tensors carry the leg sizes,
//! the vocabulary hash of the embeddings the leg was trained with, and the
//! training configuration. Each u64 is split into four u16 chunks (low
//! first) stored as exactly representable f32 values.

use std::path::Path;

use argrank_core::autodiff::Tensor;
use argrank_core::hash::fnv1a;
use argrank_core::model::{EmbeddingTable, LegConfig, LegParameters, SiameseRanker};
use argrank_core::train::TrainConfig;

use crate::{Error, Result};

pub const MAGIC: &[u8; 4] = b"EVCK";
pub const VERSION: u32 = 1;

const META_LEG: &str = "meta.leg_config";
const META_VOCAB: &str = "meta.vocab_hash";
const META_TRAIN: &str = "meta.train_config";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CheckpointError {
    #[error("not a checkpoint (bad magic bytes)")]
    BadMagic,
    #[error("unsupported checkpoint version {0} (this build reads version {VERSION})")]
    UnsupportedVersion(u32),
    #[error("truncated while reading {0}")]
    Truncated(&'static str),
    #[error("checksum mismatch: stored {stored:#018x}, computed {computed:#018x}")]
    ChecksumMismatch { stored: u64, computed: u64 },
    #[error("malformed: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: LegParameters,
    pub vocab_hash: u64,
    pub train: TrainConfig,
}

impl Checkpoint {
    pub fn new(model: &SiameseRanker, table: &EmbeddingTable, train: TrainConfig) -> Self {
        Checkpoint {
            params: model.params.clone(),
            vocab_hash: table.vocab_hash(),
            train,
        }
    }

    pub fn leg_config(&self) -> LegConfig {
        *self.params.config()
    }

    pub fn into_model(self) -> SiameseRanker {
        SiameseRanker::from_params(self.params)
    }

    /// Fails unless `table` is the vocabulary the leg was trained with.
    pub fn check_table(&self, table: &EmbeddingTable) -> Result<()> {
        if table.vocab_hash() != self.vocab_hash {
            return Err(Error::Schema(format!(
                "embeddings do not match the checkpoint (vocabulary hash {:#018x}, expected {:#018x})",
                table.vocab_hash(),
                self.vocab_hash
            )));
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let leg = self.leg_config();
        let t = &self.train;
        let mut named: Vec<(String, Tensor)> = vec![
            (
                META_LEG.to_string(),
                meta_tensor(&[leg.embed_dim as u64, leg.hidden as u64, leg.heads as u64, leg.max_len as u64]),
            ),
            (META_VOCAB.to_string(), meta_tensor(&[self.vocab_hash])),
            (
                META_TRAIN.to_string(),
                meta_tensor(&[
                    t.epochs as u64,
                    t.learning_rate.to_bits(),
                    t.clip_norm.to_bits(),
                    f64::from(t.dropout_rate).to_bits(),
                    t.batch_size as u64,
                    t.seed,
                ]),
            ),
        ];
        named.extend(self.params.named().into_iter().map(|(n, t)| (n, t.clone())));
        encode(&named)
    }

    /// Decodes a checkpoint, rebuilding the leg with the sizes it records.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let named = decode(bytes)?;
        let leg = meta(&named, META_LEG, 4)?;
        let config = LegConfig {
            embed_dim: to_usize(leg[0])?,
            hidden: to_usize(leg[1])?,
            heads: to_usize(leg[2])?,
            max_len: to_usize(leg[3])?,
        };
        Self::assemble(&named, config)
    }

    /// Decodes a checkpoint into a leg of the caller's expected sizes. A
    /// checkpoint of different sizes fails with a shape error naming the
    /// first mismatching tensor.
    pub fn load_into(bytes: &[u8], expected: LegConfig) -> Result<Self> {
        Self::assemble(&decode(bytes)?, expected)
    }

    fn assemble(named: &[(String, Tensor)], config: LegConfig) -> Result<Self> {
        let vocab = meta(named, META_VOCAB, 1)?;
        let t = meta(named, META_TRAIN, 6)?;
        let train = TrainConfig {
            epochs: to_usize(t[0])?,
            learning_rate: f64::from_bits(t[1]),
            clip_norm: f64::from_bits(t[2]),
            dropout_rate: f64::from_bits(t[3]) as f32,
            batch_size: to_usize(t[4])?,
            seed: t[5],
        };
        Ok(Checkpoint {
            params: LegParameters::from_named(config, named)?,
            vocab_hash: vocab[0],
            train,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::formats::write_file(path, self.to_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path).map_err(|e| Error::io(path, e))?)
    }
}

fn meta_tensor(values: &[u64]) -> Tensor {
    let data: Vec<f32> = values
        .iter()
        .flat_map(|v| (0..4).map(move |k| ((v >> (16 * k)) & 0xffff) as f32))
        .collect();
    let shape = if values.len() == 1 { vec![4] } else { vec![values.len(), 4] };
    Tensor::new(shape, data).expect("shape matches data")
}

fn meta(named: &[(String, Tensor)], name: &str, count: usize) -> Result<Vec<u64>> {
    let t = named
        .iter()
        .find(|(n, _)| n == name)
        .map(|(_, t)| t)
        .ok_or_else(|| CheckpointError::Malformed(format!("missing `{name}`")))?;
    if t.len() != 4 * count {
        return Err(CheckpointError::Malformed(format!("`{name}` holds {} values", t.len())).into());
    }
    t.data()
        .chunks(4)
        .map(|chunk| {
            chunk.iter().rev().try_fold(0u64, |acc, &v| {
                if v.fract() != 0.0 || !(0.0..65536.0).contains(&v) {
                    return Err(CheckpointError::Malformed(format!("`{name}` is not a u16 chunk: {v}")).into());
                }
                Ok((acc << 16) | v as u64)
            })
        })
        .collect()
}

fn to_usize(v: u64) -> Result<usize> {
    usize::try_from(v).map_err(|_| CheckpointError::Malformed(format!("size {v} out of range")).into())
}

/// Serializes named tensors in the given order.
pub fn encode(named: &[(String, Tensor)]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(named.len() as u32).to_le_bytes());
    for (name, t) in named {
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.extend_from_slice(&(t.shape().len() as u32).to_le_bytes());
        for &d in t.shape() {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        for &v in t.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    let sum = fnv1a(&out);
    out.extend_from_slice(&sum.to_le_bytes());
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &'static str) -> Result<&'a [u8], CheckpointError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or(CheckpointError::Truncated(what))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self, what: &'static str) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self, what: &'static str) -> Result<u64, CheckpointError> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().expect("8 bytes")))
    }
}

/// Parses and verifies a checkpoint into its named tensors.
pub fn decode(bytes: &[u8]) -> Result<Vec<(String, Tensor)>, CheckpointError> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let mut r = Reader { bytes, pos: 4 };
    let version = r.u32("version")?;
    if version != VERSION {
        return Err(CheckpointError::UnsupportedVersion(version));
    }
    if bytes.len() < 20 {
        return Err(CheckpointError::Truncated("header"));
    }
    let (body, tail) = bytes.split_at(bytes.len() - 8);
    let stored = u64::from_le_bytes(tail.try_into().expect("8 bytes"));
    let computed = fnv1a(body);
    if stored != computed {
        return Err(CheckpointError::ChecksumMismatch { stored, computed });
    }
    r.bytes = body;
    let count = r.u32("tensor count")?;
    let mut out = Vec::new();
    for _ in 0..count {
        let len = r.u32("name length")? as usize;
        let name = std::str::from_utf8(r.take(len, "name")?)
            .map_err(|_| CheckpointError::Malformed("tensor name is not UTF-8".into()))?
            .to_string();
        let rank = r.u32("rank")? as usize;
        let mut shape = Vec::new();
        let mut numel = 1usize;
        for _ in 0..rank {
            let d = usize::try_from(r.u64("dims")?)
                .map_err(|_| CheckpointError::Malformed(format!("`{name}` dimension too large")))?;
            numel = numel
                .checked_mul(d)
                .ok_or_else(|| CheckpointError::Malformed(format!("`{name}` is too large")))?;
            shape.push(d);
        }
        let bytes_needed = numel
            .checked_mul(4)
            .ok_or_else(|| CheckpointError::Malformed(format!("`{name}` is too large")))?;
        let data = r
            .take(bytes_needed, "payload")?
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect();
        let tensor = Tensor::new(shape, data).map_err(|e| CheckpointError::Malformed(e.to_string()))?;
        if out.iter().any(|(n, _): &(String, Tensor)| *n == name) {
            return Err(CheckpointError::Malformed(format!("duplicate tensor `{name}`")));
        }
        out.push((name, tensor));
    }
    if r.pos != body.len() {
        return Err(CheckpointError::Malformed(format!(
            "{} trailing bytes before the checksum",
            body.len() - r.pos
        )));
    }
    Ok(out)
}
