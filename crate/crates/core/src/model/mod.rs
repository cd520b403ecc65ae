//! The leg network and its two uses.
//!
//! A leg maps a text to two numbers `[C, D]`: embeddings (frozen) feed a
//! BiLSTM, multi-head attention pools the states, and a linear layer emits
//! the convincingness output `C` and the dummy output `D`.
//!
//! * Pairwise: `softmax([C_a, C_b])[0]`, the probability that `a` is the
//!   more convincing text. Both legs are the same parameters.
//! * Pointwise: `softmax([C, D])[0]` for a single text.
//!
//! `D` is excluded from the training loss, so it never receives gradient.
//! Its weights start at zero, which makes it the constant 0: pointwise
//! scores are then `sigmoid(C)` and order texts exactly like the pairwise
//! preferences do.

mod embedding;
mod leg;
mod params;
mod tokenize;

pub use embedding::EmbeddingTable;
pub use leg::{
    attend, bilstm, inference, leg_forward, leg_from_embeddings, LegOutput, Mode, ParamNodes,
};
pub use params::{LegConfig, LegParameters, GATES};
pub use tokenize::{tokenize, REF_TOKEN};

use crate::autodiff::Graph;
use crate::{Error, Result};

/// `1 / (1 + exp(-x))` in `f64`.
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

/// A trained (or freshly initialized) Siamese ranker.
#[derive(Debug, Clone, PartialEq)]
pub struct SiameseRanker {
    pub params: LegParameters,
}

impl SiameseRanker {
    pub fn new(config: LegConfig, seed: u64) -> Result<Self> {
        Ok(SiameseRanker {
            params: LegParameters::init(config, seed)?,
        })
    }

    pub fn from_params(params: LegParameters) -> Self {
        SiameseRanker { params }
    }

    pub fn config(&self) -> &LegConfig {
        self.params.config()
    }

    pub fn check_table(&self, table: &EmbeddingTable) -> Result<()> {
        if table.dim() != self.config().embed_dim {
            return Err(Error::Config(alloc::format!(
                "embedding dimension {} does not match model dimension {}",
                table.dim(),
                self.config().embed_dim
            )));
        }
        Ok(())
    }

    /// Inference-mode leg output for one text.
    pub fn leg_output(&self, table: &EmbeddingTable, text: &str) -> Result<LegOutput> {
        self.check_table(table)?;
        let mut graph = Graph::new();
        let nodes = ParamNodes::register(&mut graph, &self.params, false)?;
        let out = leg_forward(&mut graph, &nodes, table, text, &mut inference())?;
        let v = graph.value(out).data();
        Ok(LegOutput { c: v[0], d: v[1] })
    }

    /// Probability that `a` is more convincing than `b`.
    pub fn pairwise_probability(&self, table: &EmbeddingTable, a: &str, b: &str) -> Result<f64> {
        let ca = self.leg_output(table, a)?.c;
        let cb = self.leg_output(table, b)?.c;
        Ok(pairwise_from_outputs(ca, cb))
    }

    /// Pointwise convincingness in `(0, 1)`.
    pub fn pointwise_score(&self, table: &EmbeddingTable, text: &str) -> Result<f64> {
        Ok(pointwise_from_output(self.leg_output(table, text)?))
    }
}

/// `softmax([c_a, c_b])[0]`.
pub fn pairwise_from_outputs(c_a: f32, c_b: f32) -> f64 {
    logistic(f64::from(c_a) - f64::from(c_b))
}

/// `softmax([c, d])[0]`.
pub fn pointwise_from_output(out: LegOutput) -> f64 {
    logistic(f64::from(out.c) - f64::from(out.d))
}
