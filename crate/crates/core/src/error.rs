//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by tensor algebra, model construction, and estimation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {detail}")]
    ShapeMismatch { op: &'static str, detail: String },

    #[error("axis {axis} out of range for tensor with {ndim} modes")]
    AxisOutOfRange { axis: usize, ndim: usize },

    #[error("tensor is not square: {0}")]
    NotSquare(String),

    #[error("ZC root {root} is not coprime to sequence length {len}")]
    NonCoprimeRoot { root: u64, len: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("problem size {size} exceeds dense cap {cap}")]
    SizeCapExceeded { size: usize, cap: usize },

    #[error("overlap degree undefined for an all-zero power tensor")]
    ZeroPowerOverlap,

    #[error("iterative estimator diverged: {0}")]
    Divergence(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
