//! Domain types and storage for 12-lead ECG records.
//!
//! A record is stored as a pair of files: a UTF-8 JSON sidecar
//! (`<name>.ecgjson`) describing the record, and a raw little-endian
//! float32 payload (`<name>.ecgf32`) holding the signal row-major,
//! leads × samples. Dataset manifests, the label vocabulary, and
//! leakage-free subject-wise splitting live here too.

mod csv;
mod error;
mod label;
mod lead;
mod manifest;
mod record;

pub use csv::record_from_csv;
pub use error::EcgDataError;
pub use label::{fnv1a64, LabelVector, Vocabulary, BUILTIN_VOCABULARY};
pub use lead::{LeadId, LeadMatrix, NUM_LEADS};
pub use manifest::{split_by_subject, DatasetManifest, ManifestEntry, Split};
pub use record::{load_record, save_record, EcgRecord, Provenance};

pub type Result<T> = std::result::Result<T, EcgDataError>;
