use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use super::tokenize::tokenize;
use crate::autodiff::Tensor;
use crate::{Error, Result};

/// Frozen word vectors. Never part of the trainable parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    tokens: Vec<String>,
    index: BTreeMap<String, usize>,
    values: Vec<f32>,
}

impl EmbeddingTable {
    /// `rows[i]` is the vector of `tokens[i]`. Later duplicates of a token
    /// are ignored.
    pub fn new(dim: usize, entries: Vec<(String, Vec<f32>)>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("embedding dimension must be positive".into()));
        }
        let mut table = EmbeddingTable {
            dim,
            tokens: Vec::with_capacity(entries.len()),
            index: BTreeMap::new(),
            values: Vec::with_capacity(entries.len() * dim),
        };
        for (token, vector) in entries {
            if vector.len() != dim {
                return Err(Error::Config(alloc::format!(
                    "vector for `{token}` has {} components, expected {dim}",
                    vector.len()
                )));
            }
            if vector.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("embedding vector"));
            }
            if table.index.contains_key(&token) {
                continue;
            }
            table.index.insert(token.clone(), table.tokens.len());
            table.tokens.push(token);
            table.values.extend(vector);
        }
        Ok(table)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vocab_size(&self) -> usize {
        self.tokens.len()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn row(&self, token: &str) -> Option<&[f32]> {
        self.index
            .get(token)
            .map(|&i| &self.values[i * self.dim..(i + 1) * self.dim])
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    /// Hash of the vocabulary (tokens in row order and the dimension).
    pub fn vocab_hash(&self) -> u64 {
        let mut h = crate::hash::Fnv1a::new();
        h.write(&(self.dim as u64).to_le_bytes());
        for t in &self.tokens {
            h.write(t.as_bytes());
            h.write(&[0xff]);
        }
        h.finish()
    }

    /// `[T, dim]` matrix for the first `max_len` tokens of `text`.
    /// Unknown tokens map to the zero vector.
    pub fn embed(&self, text: &str, max_len: usize) -> Result<Tensor> {
        let tokens = tokenize(text);
        if tokens.is_empty() || max_len == 0 {
            return Err(Error::EmptyInput);
        }
        let len = tokens.len().min(max_len);
        let mut data = Vec::with_capacity(len * self.dim);
        for tok in &tokens[..len] {
            match self.row(tok) {
                Some(r) => data.extend_from_slice(r),
                None => data.extend(core::iter::repeat_n(0.0, self.dim)),
            }
        }
        Tensor::new(alloc::vec![len, self.dim], data)
    }
}
