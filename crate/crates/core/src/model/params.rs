use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::autodiff::Tensor;
use crate::rng::{seeded, stream};
use crate::{Error, Result};

/// Sizes of one leg.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LegConfig {
    pub embed_dim: usize,
    /// LSTM width per direction.
    pub hidden: usize,
    /// Number of attention heads.
    pub heads: usize,
    /// Tokens kept per text.
    pub max_len: usize,
}

impl LegConfig {
    /// Width 128, 100 heads, 60 tokens.
    pub fn standard(embed_dim: usize) -> Self {
        LegConfig {
            embed_dim,
            hidden: 128,
            heads: 100,
            max_len: 60,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.embed_dim == 0 || self.hidden == 0 || self.heads == 0 || self.max_len == 0 {
            return Err(Error::Config(format!("all leg sizes must be positive: {self:?}")));
        }
        Ok(())
    }

    /// Expected shape of each named tensor, in storage order.
    pub fn tensor_shapes(&self) -> Vec<(String, Vec<usize>)> {
        let (d, h) = (self.embed_dim, self.hidden);
        let mut out = Vec::with_capacity(PARAM_COUNT);
        for dir in ["fwd", "bwd"] {
            for gate in GATES {
                out.push((format!("{dir}.w_{gate}"), vec![d, h]));
            }
            for gate in GATES {
                out.push((format!("{dir}.u_{gate}"), vec![h, h]));
            }
            for gate in GATES {
                out.push((format!("{dir}.b_{gate}"), vec![1, h]));
            }
        }
        out.push(("attn.queries".to_string(), vec![self.heads, 2 * h]));
        out.push(("out.weight".to_string(), vec![self.heads * 2 * h, 2]));
        out.push(("out.bias".to_string(), vec![1, 2]));
        out
    }
}

/// Gate order inside each LSTM block: input, forget, output, candidate.
pub const GATES: [&str; 4] = ["i", "f", "o", "c"];

pub(crate) const PARAM_COUNT: usize = 27;
pub(crate) const QUERIES: usize = 24;
pub(crate) const OUT_WEIGHT: usize = 25;
pub(crate) const OUT_BIAS: usize = 26;

/// Offset of the first tensor of a direction block (`w_i`).
pub(crate) fn direction_offset(backward: bool) -> usize {
    if backward {
        12
    } else {
        0
    }
}

/// Every trainable tensor of a leg. Both legs of the Siamese network use
/// the same instance.
#[derive(Debug, Clone, PartialEq)]
pub struct LegParameters {
    config: LegConfig,
    tensors: Vec<Arc<Tensor>>,
}

impl LegParameters {
    /// Weights uniform in `[-0.05, 0.05)`, biases zero. The output column
    /// feeding the dummy output starts at zero, so the dummy is the constant
    /// 0 for every input and stays there (it never receives a gradient).
    pub fn init(config: LegConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = seeded(seed, stream::INIT);
        let mut tensors = Vec::with_capacity(PARAM_COUNT);
        for (i, (name, shape)) in config.tensor_shapes().into_iter().enumerate() {
            let numel: usize = shape.iter().product();
            let data: Vec<f32> = if name.contains(".b_") || i == OUT_BIAS {
                vec![0.0; numel]
            } else if i == OUT_WEIGHT {
                (0..numel)
                    .map(|k| {
                        let v = rng.gen_range(-0.05f32..0.05);
                        if k % 2 == 1 {
                            0.0
                        } else {
                            v
                        }
                    })
                    .collect()
            } else {
                (0..numel).map(|_| rng.gen_range(-0.05f32..0.05)).collect()
            };
            tensors.push(Arc::new(Tensor::new(shape, data)?));
        }
        Ok(LegParameters { config, tensors })
    }

    /// All-zero parameters (useful as a fixed point in tests).
    pub fn zeros(config: LegConfig) -> Result<Self> {
        config.validate()?;
        let tensors = config
            .tensor_shapes()
            .into_iter()
            .map(|(_, s)| Arc::new(Tensor::zeros(&s)))
            .collect();
        Ok(LegParameters { config, tensors })
    }

    /// Rebuilds parameters from named tensors, checking names and shapes
    /// against `config`. Extra names are ignored.
    pub fn from_named(config: LegConfig, named: &[(String, Tensor)]) -> Result<Self> {
        config.validate()?;
        let mut tensors = Vec::with_capacity(PARAM_COUNT);
        for (name, expected) in config.tensor_shapes() {
            let found = named
                .iter()
                .find(|(n, _)| *n == name)
                .ok_or_else(|| Error::MissingTensor(name.clone()))?;
            if found.1.shape() != expected.as_slice() {
                return Err(Error::TensorShape {
                    name,
                    expected,
                    found: found.1.shape().to_vec(),
                });
            }
            if !found.1.all_finite() {
                return Err(Error::NonFinite("loaded parameter"));
            }
            tensors.push(Arc::new(found.1.clone()));
        }
        Ok(LegParameters { config, tensors })
    }

    pub fn config(&self) -> &LegConfig {
        &self.config
    }

    pub fn tensors(&self) -> &[Arc<Tensor>] {
        &self.tensors
    }

    /// Mutable access for optimizers; copies a tensor only if it is shared.
    pub fn tensor_mut(&mut self, index: usize) -> &mut Tensor {
        Arc::make_mut(&mut self.tensors[index])
    }

    /// Mutable views of every tensor, in storage order.
    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        self.tensors.iter_mut().map(Arc::make_mut).collect()
    }

    pub fn named(&self) -> Vec<(String, &Tensor)> {
        self.config
            .tensor_shapes()
            .into_iter()
            .zip(&self.tensors)
            .map(|((name, _), t)| (name, t.as_ref()))
            .collect()
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.named().into_iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    pub fn set(&mut self, name: &str, tensor: Tensor) -> Result<()> {
        let shapes = self.config.tensor_shapes();
        let (idx, (_, expected)) = shapes
            .iter()
            .enumerate()
            .find(|(_, (n, _))| n == name)
            .ok_or_else(|| Error::MissingTensor(name.to_string()))?;
        if tensor.shape() != expected.as_slice() {
            return Err(Error::TensorShape {
                name: name.to_string(),
                expected: expected.clone(),
                found: tensor.shape().to_vec(),
            });
        }
        self.tensors[idx] = Arc::new(tensor);
        Ok(())
    }

    pub fn bit_eq(&self, other: &LegParameters) -> bool {
        self.config == other.config
            && self
                .tensors
                .iter()
                .zip(&other.tensors)
                .all(|(a, b)| a.bit_eq(b))
    }

    pub fn num_values(&self) -> usize {
        self.tensors.iter().map(|t| t.len()).sum()
    }
}
