use thiserror::Error;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("shape mismatch in {op}: {detail}")]
    ShapeMismatch { op: &'static str, detail: String },

    #[error("backward requires a scalar loss, got shape {0:?}")]
    NonScalarLoss(Vec<usize>),

    #[error("non-finite gradient in parameter {0}")]
    NonFiniteGradient(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("invalid argument: {0}")]
    InvalidArg(String),

    #[error("schedule step {step} out of range 0..={total}")]
    StepOutOfRange { step: u64, total: u64 },

    #[error("unknown parameter {0:?} in checkpoint")]
    UnknownParam(String),

    #[error("checkpoint blob checksum mismatch: manifest says {expected}, blob hashes to {actual}")]
    ChecksumMismatch { expected: String, actual: String },

    #[error("checkpoint blob size mismatch: expected {expected} bytes, found {actual}")]
    BlobSizeMismatch { expected: usize, actual: usize },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed checkpoint manifest: {0}")]
    Json(#[from] serde_json::Error),
}
