use thiserror::Error;

/// Errors produced by the ball-convolution library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid index: {0}")]
    Index(String),

    #[error("layout mismatch: expected {expected}, found {found}")]
    LayoutMismatch { expected: String, found: String },

    #[error("alpha {alpha} violates the convergence bound 2/rho(AA^T) = {bound:.6e}")]
    AlphaBound { alpha: f64, bound: f64 },

    #[error("kernel has content outside the axially symmetric (m = 0) mask")]
    UnmaskedKernel,

    #[error("convolution response has a non-negligible imaginary part ({0:.3e})")]
    ComplexResponse(f64),

    #[error("zero norm: {0}")]
    ZeroNorm(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("quadrature weights are required but missing")]
    MissingWeights,

    #[error("dimension mismatch: {0}")]
    Shape(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid file format: {0}")]
    Format(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
