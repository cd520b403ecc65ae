use alloc::vec::Vec;

use rand::Rng;

use super::params::{direction_offset, LegParameters, OUT_BIAS, OUT_WEIGHT, QUERIES};
use crate::autodiff::{Graph, NodeId, Tensor};
use crate::model::EmbeddingTable;
use crate::Result;

/// Convincingness output `c` and dummy output `d` of one leg.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LegOutput {
    pub c: f32,
    pub d: f32,
}

/// Whether dropout is active for a forward pass.
pub enum Mode<'r, R: Rng + ?Sized> {
    Inference,
    Training { dropout_rate: f32, rng: &'r mut R },
}

impl<R: Rng + ?Sized> Mode<'_, R> {
    pub fn is_training(&self) -> bool {
        matches!(self, Mode::Training { .. })
    }
}

/// Inference mode without a generator.
pub fn inference() -> Mode<'static, rand_chacha::ChaCha8Rng> {
    Mode::Inference
}

struct DirectionNodes {
    w: NodeId,
    u: NodeId,
    b: NodeId,
}

/// Parameters registered in one graph. Registering once per graph and
/// reusing the handles for both legs is what makes the weights shared:
/// gradients from both legs accumulate on the same leaves.
pub struct ParamNodes {
    leaves: Vec<NodeId>,
    fwd: DirectionNodes,
    bwd: DirectionNodes,
    hidden: usize,
    max_len: usize,
}

impl ParamNodes {
    pub fn register(graph: &mut Graph, params: &LegParameters, requires_grad: bool) -> Result<Self> {
        let leaves: Vec<NodeId> = params
            .tensors()
            .iter()
            .map(|t| graph.leaf_shared(t.clone(), requires_grad))
            .collect();
        let mut direction = |backward: bool| -> Result<DirectionNodes> {
            let o = direction_offset(backward);
            Ok(DirectionNodes {
                w: graph.concat_cols(&leaves[o..o + 4])?,
                u: graph.concat_cols(&leaves[o + 4..o + 8])?,
                b: graph.concat_cols(&leaves[o + 8..o + 12])?,
            })
        };
        let fwd = direction(false)?;
        let bwd = direction(true)?;
        Ok(ParamNodes {
            leaves,
            fwd,
            bwd,
            hidden: params.config().hidden,
            max_len: params.config().max_len,
        })
    }

    /// Leaf handles in parameter storage order.
    pub fn leaves(&self) -> &[NodeId] {
        &self.leaves
    }
}

/// Runs one LSTM direction over the rows of `x` (`[T, d]`). Returns the
/// hidden state for each position, in position order.
fn lstm_direction(
    graph: &mut Graph,
    x: NodeId,
    steps: usize,
    p: &DirectionNodes,
    hidden: usize,
    backward: bool,
) -> Result<Vec<NodeId>> {
    let h4 = 4 * hidden;
    let xw = graph.matmul(x, p.w)?;
    let mut states = alloc::vec![None; steps];
    let mut prev: Option<(NodeId, NodeId)> = None;
    let order: Vec<usize> = if backward {
        (0..steps).rev().collect()
    } else {
        (0..steps).collect()
    };
    for t in order {
        let xt = graph.slice(xw, t..t + 1, 0..h4)?;
        let pre = match prev {
            Some((h, _)) => {
                let hu = graph.matmul(h, p.u)?;
                graph.add(xt, hu)?
            }
            None => xt,
        };
        let z = graph.add(pre, p.b)?;
        let zi = graph.slice(z, 0..1, 0..hidden)?;
        let zf = graph.slice(z, 0..1, hidden..2 * hidden)?;
        let zo = graph.slice(z, 0..1, 2 * hidden..3 * hidden)?;
        let zc = graph.slice(z, 0..1, 3 * hidden..h4)?;
        let i = graph.sigmoid(zi);
        let o = graph.sigmoid(zo);
        let g = graph.tanh(zc);
        let ig = graph.mul(i, g)?;
        let c = match prev {
            Some((_, c_prev)) => {
                let f = graph.sigmoid(zf);
                let fc = graph.mul(f, c_prev)?;
                graph.add(fc, ig)?
            }
            None => ig,
        };
        let tc = graph.tanh(c);
        let h = graph.mul(o, tc)?;
        states[t] = Some(h);
        prev = Some((h, c));
    }
    Ok(states.into_iter().map(|s| s.expect("every step visited")).collect())
}

/// BiLSTM over `x` (`[T, d]`), returning the `[T, 2H]` state matrix whose
/// row `t` is `[forward h_t, backward h_t]`.
pub fn bilstm(graph: &mut Graph, x: NodeId, nodes: &ParamNodes) -> Result<NodeId> {
    let steps = graph.value(x).dims2().map(|(t, _)| t).unwrap_or(0);
    let fwd = lstm_direction(graph, x, steps, &nodes.fwd, nodes.hidden, false)?;
    let bwd = lstm_direction(graph, x, steps, &nodes.bwd, nodes.hidden, true)?;
    let rows: Vec<NodeId> = fwd
        .into_iter()
        .zip(bwd)
        .map(|(f, b)| graph.concat_cols(&[f, b]))
        .collect::<Result<_>>()?;
    graph.concat_rows(&rows)
}

/// Multi-head attention pooling: head `k` scores each state with its query
/// row, softmaxes over positions and takes the weighted sum of states. The
/// head contexts are concatenated in head order into a `[1, K·2H]` row.
pub fn attend(graph: &mut Graph, states: NodeId, queries: NodeId) -> Result<NodeId> {
    let st = graph.transpose(states)?;
    let scores = graph.matmul(queries, st)?;
    let weights = graph.softmax_rows(scores)?;
    let contexts = graph.matmul(weights, states)?;
    let width = graph.value(contexts).len();
    graph.reshape(contexts, &[1, width])
}

/// Full leg on an embedded text (`[T, d]`): dropout on the embeddings,
/// BiLSTM, attention, linear layer. Returns the `[1, 2]` output `[C, D]`.
pub fn leg_from_embeddings<R: Rng + ?Sized>(
    graph: &mut Graph,
    nodes: &ParamNodes,
    embedded: Tensor,
    mode: &mut Mode<'_, R>,
) -> Result<NodeId> {
    let x = graph.leaf(embedded, false);
    let x = match mode {
        Mode::Inference => x,
        Mode::Training { dropout_rate, rng } => graph.dropout(x, *dropout_rate, *rng, true)?,
    };
    let states = bilstm(graph, x, nodes)?;
    let pooled = attend(graph, states, nodes.leaves[QUERIES])?;
    let logits = graph.matmul(pooled, nodes.leaves[OUT_WEIGHT])?;
    graph.add(logits, nodes.leaves[OUT_BIAS])
}

/// Tokenizes, embeds and runs one leg on `text`.
pub fn leg_forward<R: Rng + ?Sized>(
    graph: &mut Graph,
    nodes: &ParamNodes,
    table: &EmbeddingTable,
    text: &str,
    mode: &mut Mode<'_, R>,
) -> Result<NodeId> {
    let embedded = table.embed(text, nodes.max_len)?;
    leg_from_embeddings(graph, nodes, embedded, mode)
}
