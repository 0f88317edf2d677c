//! Error type shared by every module of the crate.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Everything that can go wrong in group arithmetic, quadrature, grids and
/// the experiment harness.
///
/// Basis indices carried by the algebra variants are 1-based, matching the
/// text file format and the `X^1..X^N` naming.
#[derive(Debug, Error)]
pub enum Error {
    #[error("nilpotency step {step} is not supported (maximum is 3)")]
    StepUnsupported { step: usize },

    #[error("dilation radius must be positive, got {0}")]
    NonPositiveRadius(f64),

    #[error("invalid algebra description: {0}")]
    InvalidAlgebra(String),

    #[error("antisymmetry violated: c^{k}_{{{i}{j}}} != -c^{k}_{{{j}{i}}}")]
    Antisymmetry { i: usize, j: usize, k: usize },

    #[error("grading violated by bracket [X^{i}, X^{j}] -> X^{k}")]
    Grading { i: usize, j: usize, k: usize },

    #[error(
        "Jacobi identity violated for triple ({i}, {j}, {k}) in component {l} (defect {defect:e})"
    )]
    Jacobi {
        i: usize,
        j: usize,
        k: usize,
        l: usize,
        defect: f64,
    },

    #[error("quadrature did not converge: {0}")]
    QuadratureNotConverged(String),

    #[error("grid has {nodes} node(s) along axis {axis}; at least 3 are required")]
    GridTooSmall { axis: usize, nodes: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("unknown builtin datum `{0}`")]
    UnknownDatum(String),

    #[error("invalid norm pair p={p}, q={q}: {reason}")]
    InvalidNormPair { p: f64, q: f64, reason: String },

    #[error("degenerate slope fit: {0}")]
    DegenerateFit(String),

    #[error("kernel `{kernel}` cannot be used with this algebra: {reason}")]
    KernelMismatch { kernel: String, reason: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("configuration error ({location}): {message}")]
    Config { location: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
