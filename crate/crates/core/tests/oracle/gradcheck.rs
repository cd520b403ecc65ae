//! Analytic gradients of the library against central differences of
//! independent `f64` computations.

use argrank_core::autodiff::{Graph, NodeId, Tensor};
use argrank_core::corpus::Winner;
use argrank_core::model::{inference, EmbeddingTable, LegConfig, LegParameters, ParamNodes};
use argrank_core::rng::seeded;
use argrank_core::train::{siamese_loss, TrainingPair};
use rand::Rng;

use super::leg::{sigmoid, Leg64};
use super::{central_diff, rel_err};

pub const STEP: f64 = 1e-3;
pub const FLOOR: f64 = 1e-4;
pub const PER_OP_TOL: f64 = 1e-4;
pub const LEG_TOL: f64 = 1e-3;
pub const CONFIGS: u64 = 20;

type Shadow = Box<dyn Fn(&[Vec<f64>]) -> Vec<f64>>;
type Build = Box<dyn Fn(&mut Graph, &[NodeId]) -> NodeId>;

pub struct Case {
    pub name: &'static str,
    pub shapes: Vec<Vec<usize>>,
    pub out_len: usize,
    pub out_shape: Vec<usize>,
    pub shadow: Shadow,
    pub build: Build,
}

pub fn values(rng: &mut impl Rng, n: usize) -> Vec<f32> {
    (0..n).map(|_| rng.gen_range(-1.5f32..1.5)).collect()
}

fn matmul64(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        for j in 0..n {
            out[i * n + j] = (0..k).map(|t| a[i * k + t] * b[t * n + j]).sum();
        }
    }
    out
}

fn softmax64(row: &[f64]) -> Vec<f64> {
    let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = row.iter().map(|x| (x - m).exp()).collect();
    let z: f64 = e.iter().sum();
    e.iter().map(|x| x / z).collect()
}

pub fn cases(rng: &mut impl Rng) -> Vec<Case> {
    let m = rng.gen_range(1..=4);
    let k = rng.gen_range(1..=4);
    let n = rng.gen_range(2..=5);
    let n2 = rng.gen_range(1..=3);
    let factor: f32 = rng.gen_range(-2.0..2.0);
    let target = rng.gen_range(0..n);
    let (r0, c0) = (rng.gen_range(0..m), rng.gen_range(0..n));
    let (r1, c1) = (rng.gen_range(r0 + 1..=m), rng.gen_range(c0 + 1..=n));
    let ew = |name, f: fn(f64) -> f64, op: fn(&mut Graph, NodeId) -> NodeId| Case {
        name,
        shapes: vec![vec![m, n]],
        out_len: m * n,
        out_shape: vec![m, n],
        shadow: Box::new(move |x| x[0].iter().map(|&v| f(v)).collect()),
        build: Box::new(move |g, ids| op(g, ids[0])),
    };
    let bin = |name, f: fn(f64, f64) -> f64, op: fn(&mut Graph, NodeId, NodeId) -> NodeId| Case {
        name,
        shapes: vec![vec![m, n], vec![m, n]],
        out_len: m * n,
        out_shape: vec![m, n],
        shadow: Box::new(move |x| x[0].iter().zip(&x[1]).map(|(&a, &b)| f(a, b)).collect()),
        build: Box::new(move |g, ids| op(g, ids[0], ids[1])),
    };
    vec![
        Case {
            name: "matmul",
            shapes: vec![vec![m, k], vec![k, n]],
            out_len: m * n,
            out_shape: vec![m, n],
            shadow: Box::new(move |x| matmul64(&x[0], &x[1], m, k, n)),
            build: Box::new(|g, ids| g.matmul(ids[0], ids[1]).unwrap()),
        },
        bin("add", |a, b| a + b, |g, a, b| g.add(a, b).unwrap()),
        bin("sub", |a, b| a - b, |g, a, b| g.sub(a, b).unwrap()),
        bin("mul", |a, b| a * b, |g, a, b| g.mul(a, b).unwrap()),
        Case {
            name: "scale",
            shapes: vec![vec![m, n]],
            out_len: m * n,
            out_shape: vec![m, n],
            shadow: Box::new(move |x| x[0].iter().map(|v| v * f64::from(factor)).collect()),
            build: Box::new(move |g, ids| g.scale(ids[0], factor)),
        },
        ew("tanh", f64::tanh, |g, a| g.tanh(a)),
        ew("sigmoid", sigmoid, |g, a| g.sigmoid(a)),
        Case {
            name: "add_shared",
            shapes: vec![vec![m, n]],
            out_len: m * n,
            out_shape: vec![m, n],
            shadow: Box::new(|x| x[0].iter().map(|v| 2.0 * v).collect()),
            build: Box::new(|g, ids| g.add(ids[0], ids[0]).unwrap()),
        },
        Case {
            name: "softmax_rows",
            shapes: vec![vec![m, n]],
            out_len: m * n,
            out_shape: vec![m, n],
            shadow: Box::new(move |x| x[0].chunks(n).flat_map(softmax64).collect()),
            build: Box::new(|g, ids| g.softmax_rows(ids[0]).unwrap()),
        },
        Case {
            name: "softmax_cross_entropy",
            shapes: vec![vec![1, n]],
            out_len: 1,
            out_shape: vec![1, 1],
            shadow: Box::new(move |x| vec![-softmax64(&x[0])[target].max(1e-12).ln()]),
            build: Box::new(move |g, ids| {
                let p = g.softmax_rows(ids[0]).unwrap();
                g.cross_entropy(p, target).unwrap()
            }),
        },
        Case {
            name: "transpose",
            shapes: vec![vec![m, n]],
            out_len: m * n,
            out_shape: vec![n, m],
            shadow: Box::new(move |x| {
                let mut out = vec![0.0; m * n];
                for i in 0..m {
                    for j in 0..n {
                        out[j * m + i] = x[0][i * n + j];
                    }
                }
                out
            }),
            build: Box::new(|g, ids| g.transpose(ids[0]).unwrap()),
        },
        Case {
            name: "reshape",
            shapes: vec![vec![m, n]],
            out_len: m * n,
            out_shape: vec![1, m * n],
            shadow: Box::new(|x| x[0].clone()),
            build: Box::new(move |g, ids| g.reshape(ids[0], &[1, m * n]).unwrap()),
        },
        Case {
            name: "concat_cols",
            shapes: vec![vec![m, n], vec![m, n2]],
            out_len: m * (n + n2),
            out_shape: vec![m, n + n2],
            shadow: Box::new(move |x| {
                (0..m)
                    .flat_map(|i| {
                        x[0][i * n..(i + 1) * n]
                            .iter()
                            .chain(&x[1][i * n2..(i + 1) * n2])
                            .copied()
                            .collect::<Vec<_>>()
                    })
                    .collect()
            }),
            build: Box::new(|g, ids| g.concat_cols(&[ids[0], ids[1]]).unwrap()),
        },
        Case {
            name: "concat_rows",
            shapes: vec![vec![m, n], vec![n2, n]],
            out_len: (m + n2) * n,
            out_shape: vec![m + n2, n],
            shadow: Box::new(|x| [x[0].clone(), x[1].clone()].concat()),
            build: Box::new(|g, ids| g.concat_rows(&[ids[0], ids[1]]).unwrap()),
        },
        Case {
            name: "slice",
            shapes: vec![vec![m, n]],
            out_len: (r1 - r0) * (c1 - c0),
            out_shape: vec![r1 - r0, c1 - c0],
            shadow: Box::new(move |x| {
                (r0..r1)
                    .flat_map(|i| (c0..c1).map(move |j| (i, j)))
                    .map(|(i, j)| x[0][i * n + j])
                    .collect()
            }),
            build: Box::new(move |g, ids| g.slice(ids[0], r0..r1, c0..c1).unwrap()),
        },
        Case {
            name: "sum",
            shapes: vec![vec![m, n]],
            out_len: 1,
            out_shape: vec![1, 1],
            shadow: Box::new(|x| vec![x[0].iter().sum()]),
            build: Box::new(|g, ids| g.sum(ids[0])),
        },
    ]
}

/// Largest relative error over every input element of `case`, with the
/// output projected to a scalar by fixed random weights.
pub fn check(case: &Case, rng: &mut impl Rng) -> f64 {
    let inputs: Vec<Vec<f32>> = case.shapes.iter().map(|s| values(rng, s.iter().product())).collect();
    let weights = values(rng, case.out_len);

    let mut g = Graph::new();
    let ids: Vec<NodeId> = case
        .shapes
        .iter()
        .zip(&inputs)
        .map(|(s, v)| g.leaf(Tensor::new(s.clone(), v.clone()).unwrap(), true))
        .collect();
    let out = (case.build)(&mut g, &ids);
    assert_eq!(g.value(out).shape(), case.out_shape.as_slice(), "{}", case.name);
    let w = g.leaf(Tensor::new(case.out_shape.clone(), weights.clone()).unwrap(), false);
    let prod = g.mul(out, w).unwrap();
    let loss = g.sum(prod);
    g.backward(loss).unwrap();

    let w64: Vec<f64> = weights.iter().map(|&v| f64::from(v)).collect();
    let sizes: Vec<usize> = inputs.iter().map(Vec::len).collect();
    let flat: Vec<f64> = inputs.iter().flatten().map(|&v| f64::from(v)).collect();
    let mut f = |x: &[f64]| {
        let mut parts = Vec::new();
        let mut at = 0;
        for &s in &sizes {
            parts.push(x[at..at + s].to_vec());
            at += s;
        }
        (case.shadow)(&parts).iter().zip(&w64).map(|(a, b)| a * b).sum()
    };
    let analytic: Vec<f64> = ids
        .iter()
        .zip(&case.shapes)
        .flat_map(|(&id, s)| {
            g.grad(id)
                .unwrap_or_else(|| Tensor::zeros(s))
                .data()
                .iter()
                .map(|&v| f64::from(v))
                .collect::<Vec<_>>()
        })
        .collect();
    (0..flat.len())
        .map(|i| rel_err(analytic[i], central_diff(&mut f, &flat, i, STEP), FLOOR))
        .fold(0.0, f64::max)
}

pub struct LegCase {
    pub config: LegConfig,
    pub params: LegParameters,
    pub table: EmbeddingTable,
    pub a: String,
    pub b: String,
    pub winner: Winner,
}

pub const WORDS: [&str; 7] = ["court", "ruled", "study", "found", "vote", "tax", "rights"];

pub fn leg_case(seed: u64) -> LegCase {
    let mut rng = seeded(seed, 103);
    let config = LegConfig {
        embed_dim: rng.gen_range(2..=3),
        hidden: rng.gen_range(2..=3),
        heads: rng.gen_range(1..=3),
        max_len: 10,
    };
    let mut params = LegParameters::init(config, seed).unwrap();
    for (name, shape) in config.tensor_shapes() {
        let n = shape.iter().product();
        let v: Vec<f32> = (0..n).map(|_| rng.gen_range(-0.6f32..0.6)).collect();
        params.set(&name, Tensor::new(shape, v).unwrap()).unwrap();
    }
    // the last word stays out of the table
    let entries = WORDS[..6]
        .iter()
        .map(|w| (w.to_string(), values(&mut rng, config.embed_dim)))
        .collect();
    let table = EmbeddingTable::new(config.embed_dim, entries).unwrap();
    let mut text = || {
        (0..4)
            .map(|_| WORDS[rng.gen_range(0..WORDS.len())])
            .collect::<Vec<_>>()
            .join(" ")
    };
    let (a, b) = (text(), text());
    let winner = if seed.is_multiple_of(2) { Winner::A } else { Winner::B };
    LegCase { config, params, table, a, b, winner }
}

pub fn shadow_of(case: &LegCase) -> Leg64 {
    Leg64 {
        d: case.config.embed_dim,
        h: case.config.hidden,
        k: case.config.heads,
        tensors: case
            .params
            .tensors()
            .iter()
            .map(|t| t.data().iter().map(|&v| f64::from(v)).collect())
            .collect(),
    }
}

pub fn embedded(table: &EmbeddingTable, text: &str) -> Vec<Vec<f64>> {
    let t = table.embed(text, 10).unwrap();
    let (_, d) = t.dims2().unwrap();
    t.data().chunks(d).map(|r| r.iter().map(|&v| f64::from(v)).collect()).collect()
}

/// Worst relative error per op over one seeded configuration.
pub fn per_op_errors(seed: u64) -> Vec<(&'static str, f64)> {
    let mut rng = seeded(seed, 100);
    cases(&mut rng).into_iter().map(|case| {
        let e = check(&case, &mut rng);
        (case.name, e)
    }).collect()
}

/// Analytic parameter gradients of the Siamese loss, in storage order.
pub fn leg_analytic(case: &LegCase) -> (f64, Vec<f64>) {
    let pair = TrainingPair {
        pair_id: "p".into(),
        a: case.a.clone(),
        b: case.b.clone(),
        winner: case.winner,
    };
    let mut g = Graph::new();
    let nodes = ParamNodes::register(&mut g, &case.params, true).unwrap();
    let loss = siamese_loss(&mut g, &nodes, &case.table, &pair, &mut inference()).unwrap();
    g.backward(loss).unwrap();
    let grads = nodes
        .leaves()
        .iter()
        .zip(case.params.tensors())
        .flat_map(|(&id, t)| {
            g.grad(id)
                .unwrap_or_else(|| Tensor::zeros(t.shape()))
                .data()
                .iter()
                .map(|&v| f64::from(v))
                .collect::<Vec<_>>()
        })
        .collect();
    (f64::from(g.value(loss).data()[0]), grads)
}

/// Worst relative error of the full-leg loss gradient for one seeded case,
/// plus the gap between library and shadow loss values.
pub fn leg_error(seed: u64) -> (f64, f64) {
    let case = leg_case(seed);
    let (loss, analytic) = leg_analytic(&case);
    let shadow = shadow_of(&case);
    let (xa, xb) = (embedded(&case.table, &case.a), embedded(&case.table, &case.b));
    let target = case.winner.index();
    let loss_gap = (shadow.siamese_loss(&xa, &xb, target) - loss).abs();
    let flat = shadow.flat();
    let mut f = |x: &[f64]| shadow.with_flat(x).siamese_loss(&xa, &xb, target);
    let worst = (0..flat.len())
        .map(|i| rel_err(analytic[i], central_diff(&mut f, &flat, i, STEP), FLOOR))
        .fold(0.0, f64::max);
    (worst, loss_gap)
}
