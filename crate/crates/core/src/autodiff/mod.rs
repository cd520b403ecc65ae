//! Dense reverse-mode differentiation over `f32` tensors.
//!
//! A [`Graph`] is an append-only tape: nodes are pushed in evaluation order,
//! so reverse insertion order is a valid reverse topological order for
//! [`Graph::backward`]. Shapes are always explicit; nothing broadcasts.

mod clip;
mod graph;
mod tensor;

pub use clip::{global_norm, global_norm_clip};
pub use graph::{Graph, NodeId};
pub use tensor::Tensor;
