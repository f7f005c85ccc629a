use thiserror::Error;

pub type Result<T> = std::result::Result<T, DtlError>;

#[derive(Debug, Error)]
pub enum DtlError {
    #[error("index {0} out of range 1..=3")]
    IndexOutOfRange(usize),

    #[error("spinor is not normalized: |phi0| = {0}")]
    NonUnitSpinor(f64),

    #[error("unsupported potential variant: {0}")]
    UnsupportedVariant(String),

    #[error("point lies outside the sampled box: {0}")]
    Domain(String),

    #[error("classification undetermined: {0}")]
    ClassificationUndetermined(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("quadrature did not reach the requested accuracy: {0}")]
    Accuracy(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("rank mismatch: expected rank {expected}, got {found}")]
    RankMismatch { expected: usize, found: usize },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("zero field has no residual")]
    ZeroField,

    #[error("gauge construction failed: {0}")]
    Gauge(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
