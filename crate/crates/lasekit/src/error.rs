//! Error type shared across the toolkit.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error at {path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("node index {index} out of range for graph with {n} nodes")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("empty node selection")]
    EmptySelection,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("eigensolver did not converge after {products} matrix products (best residual {best_residual:.3e}, tol {tol:.3e})")]
    NonConvergence {
        products: usize,
        best_residual: f64,
        tol: f64,
    },

    #[error("requested {r} eigenpairs from an operator of size {n}")]
    RankTooLarge { r: usize, n: usize },

    #[error("eigenvalue {index} is {value:.6e}; {advice}")]
    NonPositiveEigenvalue {
        index: usize,
        value: f64,
        advice: String,
    },

    #[error("kernel matrix is not positive semi-definite at grid scale: eigenvalue {value:.6e} below tolerance {tol:.6e}")]
    NotPsd { value: f64, tol: f64 },

    #[error(
        "requested {requested} features but only {available} positive eigenvalues are available"
    )]
    RankDeficient { requested: usize, available: usize },

    #[error("node {index} is excluded from the embedding (zero weight)")]
    ExcludedNode { index: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("csv schema violation: {0}")]
    Schema(String),

    #[error("{0}")]
    Other(String),
}
