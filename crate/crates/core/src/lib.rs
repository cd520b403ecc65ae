//! Pairwise convincingness ranking with a weight-shared two-leg network.
//!
//! The crate is `no_std` (it needs `alloc`) and contains every algorithmic
//! piece of the toolkit:
//!
//! * [`corpus`]: topics, evidence, pair construction under the length
//!   constraint and topic-disjoint splits.
//! * [`annotation`]: crowd-label quality control (Cohen's kappa, hidden-test
//!   precision, labeler filtering, majority aggregation, transitivity audit).
//! * [`autodiff`]: a small dense reverse-mode engine.
//! * [`model`]: the BiLSTM + multi-head attention leg and its pairwise and
//!   pointwise uses.
//! * [`train`]: Adam, clipping, dropout and the epoch loop.
//! * [`eval`]: accuracy, baselines, rank correlations and the analyses.
//!
//! File formats, checkpoints and the command-line tool live in the `argrank`
//! companion crate.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod annotation;
pub mod autodiff;
pub mod corpus;
mod error;
pub mod eval;
pub mod hash;
pub mod model;
pub mod rng;
pub mod train;

pub use error::{Error, Result};
