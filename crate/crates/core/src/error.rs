use thiserror::Error;

/// Errors produced anywhere in the core library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {lhs:?} vs {rhs:?}")]
    Shape {
        op: &'static str,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported irrep degree l={0} (only l <= 1 is implemented)")]
    UnsupportedDegree(u32),

    #[error("invalid tensor-product path {0}")]
    InvalidPath(String),

    #[error("degenerate direction: zero-length vector has no spherical harmonics")]
    DegenerateDirection,

    #[error("irrep spec mismatch: {0}")]
    Spec(String),

    #[error("symmetry violation: {0}")]
    SymmetryViolation(String),

    #[error("architecture incompatible: {0}")]
    ArchitectureIncompatible(String),

    #[error("replay buffer not ready: have {have}, need {need}")]
    NotReady { have: usize, need: usize },

    #[error("training diverged: {0}")]
    Divergence(String),

    #[error("undefined measure: {0}")]
    UndefinedMeasure(String),

    #[error("quotient construction failed: {0}")]
    Quotient(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
