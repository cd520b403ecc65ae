use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Errors raised by the algorithmic core.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Operand shapes are incompatible for `op`.
    Shape {
        op: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },
    /// A tensor was built from a buffer whose length disagrees with its shape.
    BadTensor { shape: Vec<usize>, len: usize },
    NonFinite(&'static str),
    NonScalar(Vec<usize>),
    InvalidTarget { target: usize, len: usize },
    /// Text produced no tokens.
    EmptyInput,
    Config(String),
    /// A named tensor was expected but is absent.
    MissingTensor(String),
    /// A named tensor has the wrong shape for the configured model.
    TensorShape {
        name: String,
        expected: Vec<usize>,
        found: Vec<usize>,
    },
    UnknownEvidence(String),
    UnknownPair(String),
    MissingPrediction(String),
    MissingScore(String),
    /// A metric has no defined value (empty input, zero variance...).
    Undefined(&'static str),
    InsufficientPairs {
        subset: String,
        needed: usize,
        available: usize,
    },
    /// A pair was handed to an evaluation it does not belong to.
    InvalidPair { pair_id: String, reason: String },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Shape { op, left, right } => {
                write!(f, "{op}: incompatible shapes {left:?} and {right:?}")
            }
            Error::BadTensor { shape, len } => {
                write!(f, "buffer of length {len} does not match shape {shape:?}")
            }
            Error::NonFinite(ctx) => write!(f, "non-finite value in {ctx}"),
            Error::NonScalar(shape) => write!(f, "expected a scalar, got shape {shape:?}"),
            Error::InvalidTarget { target, len } => {
                write!(f, "target index {target} out of range for {len} classes")
            }
            Error::EmptyInput => write!(f, "text contains no tokens"),
            Error::Config(msg) => write!(f, "invalid configuration: {msg}"),
            Error::MissingTensor(name) => write!(f, "missing tensor `{name}`"),
            Error::TensorShape {
                name,
                expected,
                found,
            } => write!(
                f,
                "tensor `{name}` has shape {found:?}, expected {expected:?}"
            ),
            Error::UnknownEvidence(id) => write!(f, "unknown evidence id `{id}`"),
            Error::UnknownPair(id) => write!(f, "unknown pair id `{id}`"),
            Error::MissingPrediction(id) => write!(f, "no prediction for pair `{id}`"),
            Error::MissingScore(id) => write!(f, "no score for evidence `{id}`"),
            Error::Undefined(what) => write!(f, "{what} is undefined"),
            Error::InsufficientPairs {
                subset,
                needed,
                available,
            } => write!(
                f,
                "subset `{subset}` needs {needed} pairs but only {available} are available"
            ),
            Error::InvalidPair { pair_id, reason } => write!(f, "pair `{pair_id}`: {reason}"),
        }
    }
}

impl core::error::Error for Error {}
