use crate::lead::LeadId;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EcgDataError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed sidecar JSON: {0}")]
    Json(#[from] serde_json::Error),

    #[error("payload size mismatch: expected {expected} bytes, found {actual}")]
    PayloadSizeMismatch { expected: usize, actual: usize },

    #[error("payload checksum mismatch: sidecar says {expected}, payload hashes to {actual}")]
    ChecksumMismatch { expected: String, actual: String },

    #[error("unknown lead name {0:?}")]
    UnknownLead(String),

    #[error("duplicate lead {0} in lead order")]
    DuplicateLead(LeadId),

    #[error("lead {0} missing from lead order")]
    MissingLead(LeadId),

    #[error("signal must have exactly {expected} leads, found {actual}")]
    BadLeadCount { expected: usize, actual: usize },

    #[error("signal must contain at least one sample")]
    EmptySignal,

    #[error("sampling rate must be positive")]
    BadSamplingRate,

    #[error("test fraction must lie strictly between 0 and 1, got {0}")]
    BadTestFraction(f64),

    #[error("cannot split an empty record list")]
    EmptyRecordList,

    #[error("label vector length {actual} does not match vocabulary size {expected}")]
    LabelLengthMismatch { expected: usize, actual: usize },

    #[error("label bits must be 0 or 1, found {0}")]
    BadLabelBit(u8),

    #[error("label {0:?} not present in vocabulary")]
    UnknownLabel(String),

    #[error("vocabulary hash mismatch: expected {expected:#018x}, got {actual:#018x}")]
    VocabularyHashMismatch { expected: u64, actual: u64 },

    #[error("empty vocabulary")]
    EmptyVocabulary,

    #[error("malformed CSV: {0}")]
    BadCsv(String),
}
