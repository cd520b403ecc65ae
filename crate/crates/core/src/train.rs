//! Pairwise training of the shared leg.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::autodiff::{global_norm, global_norm_clip, Graph, NodeId, Tensor};
use crate::corpus::{Corpus, EvidencePair, GoldLabel, Winner};
use crate::model::{
    inference, leg_forward, pairwise_from_outputs, EmbeddingTable, LegParameters, Mode,
    ParamNodes, SiameseRanker,
};
use crate::rng::{seeded, stream};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub clip_norm: f64,
    pub dropout_rate: f32,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 10,
            learning_rate: 0.001,
            clip_norm: 1.0,
            dropout_rate: 0.15,
            batch_size: 32,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(String::from(m)));
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        if !(self.clip_norm.is_finite() && self.clip_norm > 0.0) {
            return bad("clip_norm must be positive");
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return bad("dropout_rate must lie in [0, 1)");
        }
        Ok(())
    }
}

/// A labeled pair with its texts resolved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingPair {
    pub pair_id: String,
    pub a: String,
    pub b: String,
    pub winner: Winner,
}

/// Joins gold labels with their pairs and evidence texts, in label order.
pub fn resolve_pairs(
    corpus: &Corpus,
    pairs: &[EvidencePair],
    labels: &[GoldLabel],
) -> Result<Vec<TrainingPair>> {
    let by_id: BTreeMap<&str, &EvidencePair> = pairs.iter().map(|p| (p.id.as_str(), p)).collect();
    labels
        .iter()
        .map(|label| {
            let pair = by_id
                .get(label.pair_id.as_str())
                .ok_or_else(|| Error::UnknownPair(label.pair_id.clone()))?;
            let (a, b) = corpus.sides(pair)?;
            Ok(TrainingPair {
                pair_id: pair.id.clone(),
                a: a.text.clone(),
                b: b.text.clone(),
                winner: label.winner,
            })
        })
        .collect()
}

/// Cross entropy of `softmax([C_a, C_b])` against the winning side. Both
/// legs run on the same registered parameters.
pub fn siamese_loss<R: Rng + ?Sized>(
    graph: &mut Graph,
    nodes: &ParamNodes,
    table: &EmbeddingTable,
    pair: &TrainingPair,
    mode: &mut Mode<'_, R>,
) -> Result<NodeId> {
    let out_a = leg_forward(graph, nodes, table, &pair.a, mode)?;
    let out_b = leg_forward(graph, nodes, table, &pair.b, mode)?;
    let c_a = graph.slice(out_a, 0..1, 0..1)?;
    let c_b = graph.slice(out_b, 0..1, 0..1)?;
    let logits = graph.concat_cols(&[c_a, c_b])?;
    let probs = graph.softmax_rows(logits)?;
    graph.cross_entropy(probs, pair.winner.index())
}

/// First and second moment estimates for Adam.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl AdamState {
    /// Zeroed moments mirroring `shapes` (one buffer per parameter tensor).
    pub fn new<'a>(params: impl IntoIterator<Item = &'a Tensor>) -> Self {
        let (m, v): (Vec<_>, Vec<_>) = params
            .into_iter()
            .map(|t| (vec![0.0; t.len()], vec![0.0; t.len()]))
            .unzip();
        AdamState {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step: 0,
            m,
            v,
        }
    }

    pub fn first_moment(&self, index: usize) -> &[f64] {
        &self.m[index]
    }

    pub fn second_moment(&self, index: usize) -> &[f64] {
        &self.v[index]
    }

    /// One bias-corrected Adam update of `params[i]` with `grads[i]`.
    pub fn step(&mut self, params: &mut [&mut Tensor], grads: &[Tensor], lr: f64) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::Config(alloc::format!(
                "adam state tracks {} tensors, got {} parameters and {} gradients",
                self.m.len(),
                params.len(),
                grads.len()
            )));
        }
        for ((p, g), m) in params.iter().zip(grads).zip(&self.m) {
            if p.shape() != g.shape() || p.len() != m.len() {
                return Err(Error::Shape {
                    op: "adam",
                    left: p.shape().to_vec(),
                    right: g.shape().to_vec(),
                });
            }
        }
        self.step += 1;
        let t = self.step as f64;
        let bc1 = 1.0 - libm::pow(self.beta1, t);
        let bc2 = 1.0 - libm::pow(self.beta2, t);
        for (i, (p, g)) in params.iter_mut().zip(grads).enumerate() {
            let (m, v) = (&mut self.m[i], &mut self.v[i]);
            for (k, (theta, &gk)) in p.data_mut().iter_mut().zip(g.data()).enumerate() {
                let gk = f64::from(gk);
                m[k] = self.beta1 * m[k] + (1.0 - self.beta1) * gk;
                v[k] = self.beta2 * v[k] + (1.0 - self.beta2) * gk * gk;
                let m_hat = m[k] / bc1;
                let v_hat = v[k] / bc2;
                let update = lr * m_hat / (libm::sqrt(v_hat) + self.epsilon);
                *theta = (f64::from(*theta) - update) as f32;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochLog {
    /// 1-based.
    pub epoch: usize,
    /// Mean training-mode loss over the epoch's pairs.
    pub mean_loss: f64,
    /// Inference-mode accuracy on the training pairs after the epoch.
    pub train_accuracy: f64,
}

/// What the trainer exposes after each optimizer step.
pub struct StepReport<'a> {
    pub epoch: usize,
    pub step: usize,
    pub batch_loss: f64,
    /// Gradients before clipping, in parameter storage order.
    pub gradients: &'a [Tensor],
    pub grad_norm: f64,
    pub clipped_norm: f64,
}

pub fn train(
    model: &mut SiameseRanker,
    table: &EmbeddingTable,
    pairs: &[TrainingPair],
    config: &TrainConfig,
) -> Result<Vec<EpochLog>> {
    train_with_observer(model, table, pairs, config, &mut |_| {})
}

/// Seeded shuffle per epoch, mean loss per batch, backward, global-norm
/// clipping, Adam. The embedding table is only read.
pub fn train_with_observer(
    model: &mut SiameseRanker,
    table: &EmbeddingTable,
    pairs: &[TrainingPair],
    config: &TrainConfig,
    observer: &mut dyn FnMut(&StepReport<'_>),
) -> Result<Vec<EpochLog>> {
    config.validate()?;
    if pairs.is_empty() {
        return Err(Error::Config(String::from("training set is empty")));
    }
    model.check_table(table)?;
    let mut adam = AdamState::new(model.params.tensors().iter().map(|t| t.as_ref()));
    let mut shuffle_rng = seeded(config.seed, stream::SHUFFLE);
    let mut dropout_rng = seeded(config.seed, stream::DROPOUT);
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    let mut log = Vec::with_capacity(config.epochs);
    let mut step = 0;
    for epoch in 1..=config.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0f64;
        for batch in order.chunks(config.batch_size) {
            let mut graph = Graph::new();
            let nodes = ParamNodes::register(&mut graph, &model.params, true)?;
            let mut mode = Mode::Training {
                dropout_rate: config.dropout_rate,
                rng: &mut dropout_rng,
            };
            let mut total: Option<NodeId> = None;
            let mut batch_sum = 0.0f64;
            for &idx in batch {
                let loss = siamese_loss(&mut graph, &nodes, table, &pairs[idx], &mut mode)?;
                batch_sum += f64::from(graph.value(loss).data()[0]);
                total = Some(match total {
                    Some(t) => graph.add(t, loss)?,
                    None => loss,
                });
            }
            let total = total.expect("chunks are non-empty");
            let mean = graph.scale(total, 1.0 / batch.len() as f32);
            if !graph.value(mean).all_finite() {
                return Err(Error::NonFinite("training loss"));
            }
            graph.backward(mean)?;
            let mut grads: Vec<Tensor> = nodes
                .leaves()
                .iter()
                .zip(model.params.tensors())
                .map(|(&id, t)| graph.grad(id).unwrap_or_else(|| Tensor::zeros(t.shape())))
                .collect();
            drop(graph);
            let raw = grads.clone();
            let grad_norm = global_norm_clip(&mut grads, config.clip_norm);
            step += 1;
            observer(&StepReport {
                epoch,
                step,
                batch_loss: batch_sum / batch.len() as f64,
                gradients: &raw,
                grad_norm,
                clipped_norm: global_norm(&grads),
            });
            apply_adam(&mut model.params, &mut adam, &grads, config.learning_rate)?;
            loss_sum += batch_sum;
        }
        log.push(EpochLog {
            epoch,
            mean_loss: loss_sum / pairs.len() as f64,
            train_accuracy: accuracy(model, table, pairs)?,
        });
    }
    Ok(log)
}

fn apply_adam(
    params: &mut LegParameters,
    adam: &mut AdamState,
    grads: &[Tensor],
    lr: f64,
) -> Result<()> {
    adam.step(&mut params.tensors_mut(), grads, lr)
}

/// Convincingness outputs for every distinct text of `pairs`.
fn outputs_by_text<'a>(
    model: &SiameseRanker,
    table: &EmbeddingTable,
    pairs: &'a [TrainingPair],
) -> Result<BTreeMap<&'a str, f32>> {
    let mut out = BTreeMap::new();
    for p in pairs {
        for text in [p.a.as_str(), p.b.as_str()] {
            if !out.contains_key(text) {
                out.insert(text, model.leg_output(table, text)?.c);
            }
        }
    }
    Ok(out)
}

/// Inference-mode pairwise accuracy; `p >= 0.5` predicts A.
pub fn accuracy(model: &SiameseRanker, table: &EmbeddingTable, pairs: &[TrainingPair]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::Undefined("accuracy on an empty set"));
    }
    let c = outputs_by_text(model, table, pairs)?;
    let correct = pairs
        .iter()
        .filter(|p| {
            let prob = pairwise_from_outputs(c[p.a.as_str()], c[p.b.as_str()]);
            let predicted = if prob >= 0.5 { Winner::A } else { Winner::B };
            predicted == p.winner
        })
        .count();
    Ok(correct as f64 / pairs.len() as f64)
}

/// Inference-mode mean loss (no dropout, no update).
pub fn mean_loss(model: &SiameseRanker, table: &EmbeddingTable, pairs: &[TrainingPair]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::Undefined("mean loss on an empty set"));
    }
    let mut graph = Graph::new();
    let nodes = ParamNodes::register(&mut graph, &model.params, false)?;
    let mut total = 0.0;
    for p in pairs {
        let loss = siamese_loss(&mut graph, &nodes, table, p, &mut inference())?;
        total += f64::from(graph.value(loss).data()[0]);
    }
    Ok(total / pairs.len() as f64)
}
