use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use rand::Rng;

use super::Tensor;
use crate::{Error, Result};

/// Handle to a node of a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(usize);

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    MatMul(NodeId, NodeId),
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Scale(NodeId, f32),
    Tanh(NodeId),
    Sigmoid(NodeId),
    SoftmaxRows(NodeId),
    CrossEntropy { probs: NodeId, target: usize },
    Dropout { input: NodeId, mask: Vec<f32> },
    Transpose(NodeId),
    Reshape(NodeId),
    ConcatCols(Vec<NodeId>),
    ConcatRows(Vec<NodeId>),
    Slice {
        input: NodeId,
        rows: Range<usize>,
        cols: Range<usize>,
    },
    Sum(NodeId),
}

#[derive(Debug, Clone)]
struct Node {
    value: Arc<Tensor>,
    op: Op,
    requires_grad: bool,
}

/// Probabilities below this are clamped before taking the log.
pub const LOG_FLOOR: f64 = 1e-12;

/// Append-only computation tape.
#[derive(Debug, Default, Clone)]
pub struct Graph {
    nodes: Vec<Node>,
    grads: Vec<Option<Vec<f32>>>,
}

fn shape_err(op: &'static str, a: &Tensor, b: &Tensor) -> Error {
    Error::Shape {
        op,
        left: a.shape().to_vec(),
        right: b.shape().to_vec(),
    }
}

fn dims2(op: &'static str, t: &Tensor) -> Result<(usize, usize)> {
    t.dims2().ok_or_else(|| Error::Shape {
        op,
        left: t.shape().to_vec(),
        right: Vec::new(),
    })
}

fn sigmoid(x: f32) -> f32 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::expf(-x))
    } else {
        let e = libm::expf(x);
        e / (1.0 + e)
    }
}

impl Graph {
    pub fn new() -> Self {
        Graph::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor, op: Op, requires_grad: bool) -> NodeId {
        self.push_shared(Arc::new(value), op, requires_grad)
    }

    fn push_shared(&mut self, value: Arc<Tensor>, op: Op, requires_grad: bool) -> NodeId {
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        self.grads.push(None);
        NodeId(self.nodes.len() - 1)
    }

    fn rg(&self, ids: &[NodeId]) -> bool {
        ids.iter().any(|id| self.nodes[id.0].requires_grad)
    }

    pub fn leaf(&mut self, value: Tensor, requires_grad: bool) -> NodeId {
        self.push(value, Op::Leaf, requires_grad)
    }

    /// Leaf sharing storage with the caller (no copy of the values).
    pub fn leaf_shared(&mut self, value: Arc<Tensor>, requires_grad: bool) -> NodeId {
        self.push_shared(value, Op::Leaf, requires_grad)
    }

    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.nodes[id.0].value
    }

    /// Gradient accumulated by the last [`Graph::backward`]; `None` when the
    /// node received no gradient (e.g. it does not require one).
    pub fn grad(&self, id: NodeId) -> Option<Tensor> {
        self.grads[id.0]
            .as_ref()
            .map(|g| Tensor::from_parts(self.nodes[id.0].value.shape().to_vec(), g.clone()))
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (ta, tb) = (self.value(a), self.value(b));
        let (m, k) = dims2("matmul", ta)?;
        let (k2, n) = dims2("matmul", tb)?;
        if k != k2 {
            return Err(shape_err("matmul", ta, tb));
        }
        let out = matmul_kernel(ta.data(), tb.data(), m, k, n);
        let rg = self.rg(&[a, b]);
        Ok(self.push(Tensor::from_parts(vec![m, n], out), Op::MatMul(a, b), rg))
    }

    fn binary(
        &mut self,
        name: &'static str,
        a: NodeId,
        b: NodeId,
        f: impl Fn(f32, f32) -> f32,
        op: Op,
    ) -> Result<NodeId> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.shape() != tb.shape() {
            return Err(shape_err(name, ta, tb));
        }
        let data = ta.data().iter().zip(tb.data()).map(|(&x, &y)| f(x, y)).collect();
        let shape = ta.shape().to_vec();
        let rg = self.rg(&[a, b]);
        Ok(self.push(Tensor::from_parts(shape, data), op, rg))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.binary("add", a, b, |x, y| x + y, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.binary("sub", a, b, |x, y| x - y, Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.binary("mul", a, b, |x, y| x * y, Op::Mul(a, b))
    }

    fn unary(&mut self, a: NodeId, f: impl Fn(f32) -> f32, op: Op) -> NodeId {
        let t = self.value(a);
        let data = t.data().iter().map(|&x| f(x)).collect();
        let shape = t.shape().to_vec();
        let rg = self.rg(&[a]);
        self.push(Tensor::from_parts(shape, data), op, rg)
    }

    pub fn scale(&mut self, a: NodeId, factor: f32) -> NodeId {
        self.unary(a, |x| x * factor, Op::Scale(a, factor))
    }

    pub fn tanh(&mut self, a: NodeId) -> NodeId {
        self.unary(a, libm::tanhf, Op::Tanh(a))
    }

    pub fn sigmoid(&mut self, a: NodeId) -> NodeId {
        self.unary(a, sigmoid, Op::Sigmoid(a))
    }

    /// Softmax along the last axis of a rank-2 tensor (each row sums to 1).
    /// A vector is a `[1, n]` row.
    pub fn softmax_rows(&mut self, a: NodeId) -> Result<NodeId> {
        let t = self.value(a);
        let (rows, cols) = dims2("softmax", t)?;
        let mut out = Vec::with_capacity(rows * cols);
        for r in t.data().chunks(cols) {
            out.extend(softmax_row(r));
        }
        let rg = self.rg(&[a]);
        Ok(self.push(Tensor::from_parts(vec![rows, cols], out), Op::SoftmaxRows(a), rg))
    }

    /// `-ln p[target]` with the probability clamped at [`LOG_FLOOR`].
    pub fn cross_entropy(&mut self, probs: NodeId, target: usize) -> Result<NodeId> {
        let t = self.value(probs);
        if target >= t.len() {
            return Err(Error::InvalidTarget {
                target,
                len: t.len(),
            });
        }
        let p = f64::from(t.data()[target]).max(LOG_FLOOR);
        let loss = -libm::log(p) as f32;
        let rg = self.rg(&[probs]);
        Ok(self.push(Tensor::scalar(loss), Op::CrossEntropy { probs, target }, rg))
    }

    /// Inverted dropout: in training mode each element is zeroed with
    /// probability `rate` and survivors are scaled by `1 / (1 - rate)`.
    /// Outside training, or with `rate == 0`, returns `input` unchanged.
    pub fn dropout<R: Rng + ?Sized>(
        &mut self,
        input: NodeId,
        rate: f32,
        rng: &mut R,
        training: bool,
    ) -> Result<NodeId> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::Config(alloc::format!(
                "dropout rate {rate} outside [0, 1)"
            )));
        }
        if !training || rate == 0.0 {
            return Ok(input);
        }
        let keep = 1.0 / (1.0 - rate);
        let t = self.value(input);
        let mask: Vec<f32> = (0..t.len())
            .map(|_| if rng.gen::<f32>() < rate { 0.0 } else { keep })
            .collect();
        let data = t.data().iter().zip(&mask).map(|(x, m)| x * m).collect();
        let shape = t.shape().to_vec();
        let rg = self.rg(&[input]);
        Ok(self.push(Tensor::from_parts(shape, data), Op::Dropout { input, mask }, rg))
    }

    pub fn transpose(&mut self, a: NodeId) -> Result<NodeId> {
        let t = self.value(a);
        let (r, c) = dims2("transpose", t)?;
        let src = t.data();
        let mut out = vec![0.0; r * c];
        for i in 0..r {
            for j in 0..c {
                out[j * r + i] = src[i * c + j];
            }
        }
        let rg = self.rg(&[a]);
        Ok(self.push(Tensor::from_parts(vec![c, r], out), Op::Transpose(a), rg))
    }

    pub fn reshape(&mut self, a: NodeId, shape: &[usize]) -> Result<NodeId> {
        let t = self.value(a);
        if shape.iter().product::<usize>() != t.len() || shape.contains(&0) {
            return Err(Error::Shape {
                op: "reshape",
                left: t.shape().to_vec(),
                right: shape.to_vec(),
            });
        }
        let data = t.data().to_vec();
        let rg = self.rg(&[a]);
        Ok(self.push(Tensor::from_parts(shape.to_vec(), data), Op::Reshape(a), rg))
    }

    /// Joins rank-2 tensors with equal row counts side by side.
    pub fn concat_cols(&mut self, parts: &[NodeId]) -> Result<NodeId> {
        let first = *parts.first().ok_or(Error::Config("empty concat".into()))?;
        let (rows, _) = dims2("concat_cols", self.value(first))?;
        let mut widths = Vec::with_capacity(parts.len());
        for &p in parts {
            let (r, c) = dims2("concat_cols", self.value(p))?;
            if r != rows {
                return Err(shape_err("concat_cols", self.value(first), self.value(p)));
            }
            widths.push(c);
        }
        let total: usize = widths.iter().sum();
        let mut out = Vec::with_capacity(rows * total);
        for r in 0..rows {
            for (&p, &w) in parts.iter().zip(&widths) {
                out.extend_from_slice(&self.value(p).data()[r * w..(r + 1) * w]);
            }
        }
        let rg = self.rg(parts);
        Ok(self.push(
            Tensor::from_parts(vec![rows, total], out),
            Op::ConcatCols(parts.to_vec()),
            rg,
        ))
    }

    /// Stacks rank-2 tensors with equal column counts vertically.
    pub fn concat_rows(&mut self, parts: &[NodeId]) -> Result<NodeId> {
        let first = *parts.first().ok_or(Error::Config("empty concat".into()))?;
        let (_, cols) = dims2("concat_rows", self.value(first))?;
        let mut out = Vec::new();
        let mut rows = 0;
        for &p in parts {
            let (r, c) = dims2("concat_rows", self.value(p))?;
            if c != cols {
                return Err(shape_err("concat_rows", self.value(first), self.value(p)));
            }
            rows += r;
            out.extend_from_slice(self.value(p).data());
        }
        let rg = self.rg(parts);
        Ok(self.push(
            Tensor::from_parts(vec![rows, cols], out),
            Op::ConcatRows(parts.to_vec()),
            rg,
        ))
    }

    /// Rectangular block of a rank-2 tensor.
    pub fn slice(&mut self, a: NodeId, rows: Range<usize>, cols: Range<usize>) -> Result<NodeId> {
        let t = self.value(a);
        let (r, c) = dims2("slice", t)?;
        if rows.start >= rows.end || cols.start >= cols.end || rows.end > r || cols.end > c {
            return Err(Error::Shape {
                op: "slice",
                left: t.shape().to_vec(),
                right: vec![rows.start, rows.end, cols.start, cols.end],
            });
        }
        let mut out = Vec::with_capacity(rows.len() * cols.len());
        for i in rows.clone() {
            out.extend_from_slice(&t.data()[i * c + cols.start..i * c + cols.end]);
        }
        let shape = vec![rows.len(), cols.len()];
        let rg = self.rg(&[a]);
        Ok(self.push(
            Tensor::from_parts(shape, out),
            Op::Slice {
                input: a,
                rows,
                cols,
            },
            rg,
        ))
    }

    /// Sum of all elements as a `[1, 1]` scalar.
    pub fn sum(&mut self, a: NodeId) -> NodeId {
        let s: f64 = self.value(a).data().iter().map(|&v| f64::from(v)).sum();
        let rg = self.rg(&[a]);
        self.push(Tensor::scalar(s as f32), Op::Sum(a), rg)
    }

    /// Reverse pass from a scalar. Gradients from earlier calls are cleared;
    /// contributions of a node used several times add up.
    pub fn backward(&mut self, loss: NodeId) -> Result<()> {
        let lv = self.value(loss);
        if !lv.is_scalar() {
            return Err(Error::NonScalar(lv.shape().to_vec()));
        }
        for g in self.grads.iter_mut() {
            *g = None;
        }
        if !self.nodes[loss.0].requires_grad {
            return Ok(());
        }
        self.grads[loss.0] = Some(vec![1.0]);
        for i in (0..=loss.0).rev() {
            let (lower, upper) = self.grads.split_at_mut(i);
            let Some(g) = upper[0].as_deref() else {
                continue;
            };
            let node = &self.nodes[i];
            let nodes = &self.nodes;
            let mut acc = |parent: NodeId, f: &mut dyn FnMut(&mut [f32])| {
                let pn = &nodes[parent.0];
                if !pn.requires_grad {
                    return;
                }
                let slot = lower[parent.0].get_or_insert_with(|| vec![0.0; pn.value.len()]);
                f(slot);
            };
            match &node.op {
                Op::Leaf => {}
                Op::MatMul(a, b) => {
                    let (ta, tb) = (&nodes[a.0].value, &nodes[b.0].value);
                    let (m, k) = ta.dims2().unwrap();
                    let n = tb.dims2().unwrap().1;
                    acc(*a, &mut |ga| matmul_grad_left(g, tb.data(), m, k, n, ga));
                    acc(*b, &mut |gb| matmul_grad_right(ta.data(), g, m, k, n, gb));
                }
                Op::Add(a, b) => {
                    acc(*a, &mut |ga| add_into(ga, g));
                    acc(*b, &mut |gb| add_into(gb, g));
                }
                Op::Sub(a, b) => {
                    acc(*a, &mut |ga| add_into(ga, g));
                    acc(*b, &mut |gb| {
                        for (d, s) in gb.iter_mut().zip(g) {
                            *d -= s;
                        }
                    });
                }
                Op::Mul(a, b) => {
                    let (va, vb) = (nodes[a.0].value.data(), nodes[b.0].value.data());
                    acc(*a, &mut |ga| {
                        for ((d, s), y) in ga.iter_mut().zip(g).zip(vb) {
                            *d += s * y;
                        }
                    });
                    acc(*b, &mut |gb| {
                        for ((d, s), x) in gb.iter_mut().zip(g).zip(va) {
                            *d += s * x;
                        }
                    });
                }
                Op::Scale(a, factor) => acc(*a, &mut |ga| {
                    for (d, s) in ga.iter_mut().zip(g) {
                        *d += s * factor;
                    }
                }),
                Op::Tanh(a) => {
                    let y = node.value.data();
                    acc(*a, &mut |ga| {
                        for ((d, s), y) in ga.iter_mut().zip(g).zip(y) {
                            *d += s * (1.0 - y * y);
                        }
                    });
                }
                Op::Sigmoid(a) => {
                    let y = node.value.data();
                    acc(*a, &mut |ga| {
                        for ((d, s), y) in ga.iter_mut().zip(g).zip(y) {
                            *d += s * y * (1.0 - y);
                        }
                    });
                }
                Op::SoftmaxRows(a) => {
                    let y = node.value.data();
                    let cols = node.value.dims2().unwrap().1;
                    acc(*a, &mut |ga| {
                        for ((gr, yr), dr) in g.chunks(cols).zip(y.chunks(cols)).zip(ga.chunks_mut(cols)) {
                            let dot: f64 = gr
                                .iter()
                                .zip(yr)
                                .map(|(&s, &p)| f64::from(s) * f64::from(p))
                                .sum();
                            for ((d, &s), &p) in dr.iter_mut().zip(gr).zip(yr) {
                                *d += (f64::from(p) * (f64::from(s) - dot)) as f32;
                            }
                        }
                    });
                }
                Op::CrossEntropy { probs, target } => {
                    let p = f64::from(nodes[probs.0].value.data()[*target]);
                    if p > LOG_FLOOR {
                        acc(*probs, &mut |gp| {
                            gp[*target] += (-f64::from(g[0]) / p) as f32;
                        });
                    }
                }
                Op::Dropout { input, mask } => acc(*input, &mut |ga| {
                    for ((d, s), m) in ga.iter_mut().zip(g).zip(mask) {
                        *d += s * m;
                    }
                }),
                Op::Transpose(a) => {
                    // node is [c, r], parent is [r, c]
                    let (c, r) = node.value.dims2().unwrap();
                    acc(*a, &mut |ga| {
                        for i in 0..r {
                            for j in 0..c {
                                ga[i * c + j] += g[j * r + i];
                            }
                        }
                    });
                }
                Op::Reshape(a) => acc(*a, &mut |ga| add_into(ga, g)),
                Op::ConcatCols(parts) => {
                    let (rows, total) = node.value.dims2().unwrap();
                    let mut offset = 0;
                    for p in parts {
                        let w = nodes[p.0].value.dims2().unwrap().1;
                        acc(*p, &mut |gp| {
                            for r in 0..rows {
                                add_into(
                                    &mut gp[r * w..(r + 1) * w],
                                    &g[r * total + offset..r * total + offset + w],
                                );
                            }
                        });
                        offset += w;
                    }
                }
                Op::ConcatRows(parts) => {
                    let mut offset = 0;
                    for p in parts {
                        let len = nodes[p.0].value.len();
                        acc(*p, &mut |gp| add_into(gp, &g[offset..offset + len]));
                        offset += len;
                    }
                }
                Op::Slice { input, rows, cols } => {
                    let c = nodes[input.0].value.dims2().unwrap().1;
                    let w = cols.len();
                    acc(*input, &mut |ga| {
                        for (k, i) in rows.clone().enumerate() {
                            add_into(
                                &mut ga[i * c + cols.start..i * c + cols.end],
                                &g[k * w..(k + 1) * w],
                            );
                        }
                    });
                }
                Op::Sum(a) => {
                    let s = g[0];
                    acc(*a, &mut |ga| {
                        for d in ga.iter_mut() {
                            *d += s;
                        }
                    });
                }
            }
        }
        Ok(())
    }
}

fn add_into(dst: &mut [f32], src: &[f32]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

/// Numerically stable softmax of one row, reduced in `f64`.
pub(crate) fn softmax_row(row: &[f32]) -> impl Iterator<Item = f32> {
    let max = row.iter().copied().fold(f32::NEG_INFINITY, f32::max);
    let exps: Vec<f64> = row
        .iter()
        .map(|&x| libm::exp(f64::from(x) - f64::from(max)))
        .collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(move |e| (e / total) as f32)
}

fn matmul_kernel(a: &[f32], b: &[f32], m: usize, k: usize, n: usize) -> Vec<f32> {
    let mut out = Vec::with_capacity(m * n);
    let mut acc = vec![0.0f64; n];
    for i in 0..m {
        acc.iter_mut().for_each(|v| *v = 0.0);
        for kk in 0..k {
            let x = f64::from(a[i * k + kk]);
            if x == 0.0 {
                continue;
            }
            for (s, &y) in acc.iter_mut().zip(&b[kk * n..(kk + 1) * n]) {
                *s += x * f64::from(y);
            }
        }
        out.extend(acc.iter().map(|&v| v as f32));
    }
    out
}

/// `ga += g · bᵀ`
fn matmul_grad_left(g: &[f32], b: &[f32], m: usize, k: usize, n: usize, ga: &mut [f32]) {
    for i in 0..m {
        let gi = &g[i * n..(i + 1) * n];
        for kk in 0..k {
            let bk = &b[kk * n..(kk + 1) * n];
            let dot: f64 = gi.iter().zip(bk).map(|(&x, &y)| f64::from(x) * f64::from(y)).sum();
            ga[i * k + kk] += dot as f32;
        }
    }
}

/// `gb += aᵀ · g`
fn matmul_grad_right(a: &[f32], g: &[f32], m: usize, k: usize, n: usize, gb: &mut [f32]) {
    let mut acc = vec![0.0f64; k * n];
    for i in 0..m {
        let gi = &g[i * n..(i + 1) * n];
        for kk in 0..k {
            let x = f64::from(a[i * k + kk]);
            if x == 0.0 {
                continue;
            }
            for (s, &y) in acc[kk * n..(kk + 1) * n].iter_mut().zip(gi) {
                *s += x * f64::from(y);
            }
        }
    }
    for (d, s) in gb.iter_mut().zip(acc) {
        *d += s as f32;
    }
}
