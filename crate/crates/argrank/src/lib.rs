//! Files, checkpoints, statistics and the command-line tool around
//! [`argrank_core`].

pub mod checkpoint;
pub mod cli;
pub mod config;
mod error;
pub mod formats;
pub mod significance;

pub use error::{Error, Result};

/// Version string written next to every output.
pub const TOOL_VERSION: &str = concat!("argrank ", env!("CARGO_PKG_VERSION"));
