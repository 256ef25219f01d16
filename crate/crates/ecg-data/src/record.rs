use crate::label::LabelVector;
use crate::lead::{LeadId, LeadMatrix, NUM_LEADS};
use crate::{EcgDataError, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fs;
use std::path::{Path, PathBuf};

/// How a reconstructed record was produced.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub model_sha256: String,
    pub mask: Vec<String>,
    pub mode: String,
}

/// One multi-lead recording plus identity and label metadata.
///
/// `signal` rows are stored in `lead_order` order; [`load_record`]
/// always hands back canonical order.
#[derive(Debug, Clone, PartialEq)]
pub struct EcgRecord {
    pub subject_id: String,
    pub record_id: String,
    /// Sampling rate in Hz.
    pub fs: u32,
    pub signal: LeadMatrix,
    pub labels: Option<LabelVector>,
    pub lead_order: Vec<LeadId>,
    pub provenance: Option<Provenance>,
}

impl EcgRecord {
    /// A record in canonical lead order with no labels.
    pub fn new(subject_id: &str, record_id: &str, fs: u32, signal: LeadMatrix) -> Result<EcgRecord> {
        if fs == 0 {
            return Err(EcgDataError::BadSamplingRate);
        }
        Ok(EcgRecord {
            subject_id: subject_id.to_string(),
            record_id: record_id.to_string(),
            fs,
            signal,
            labels: None,
            lead_order: LeadId::ALL.to_vec(),
            provenance: None,
        })
    }

    pub fn samples(&self) -> usize {
        self.signal.samples()
    }

    pub fn is_canonical_order(&self) -> bool {
        self.lead_order == LeadId::ALL
    }

    /// Reorder rows into canonical order in place.
    pub fn canonicalize(&mut self) -> Result<()> {
        if self.is_canonical_order() {
            return Ok(());
        }
        self.signal = self.signal.reordered(&self.lead_order)?;
        self.lead_order = LeadId::ALL.to_vec();
        Ok(())
    }
}

/// Sidecar schema for `<name>.ecgjson`.
#[derive(Debug, Serialize, Deserialize)]
struct Sidecar {
    subject_id: String,
    record_id: String,
    fs: u32,
    n_samples: usize,
    lead_order: Vec<String>,
    labels: Option<Vec<u8>>,
    vocabulary_hash: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    provenance: Option<Provenance>,
    payload_sha256: String,
}

/// Strip a known extension so callers may pass `x`, `x.ecgjson`, or `x.ecgf32`.
fn base_path(path: &Path) -> PathBuf {
    match path.extension().and_then(|e| e.to_str()) {
        Some("ecgjson") | Some("ecgf32") => path.with_extension(""),
        _ => path.to_path_buf(),
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> EcgDataError + '_ {
    move |source| EcgDataError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Write the record as a JSON sidecar plus raw little-endian float32
/// payload, row-major in the record's stored lead order. Samples are
/// quantized to f32 by the format.
pub fn save_record(record: &EcgRecord, path: &Path) -> Result<()> {
    if record.fs == 0 {
        return Err(EcgDataError::BadSamplingRate);
    }
    if record.samples() == 0 {
        return Err(EcgDataError::EmptySignal);
    }
    crate::lead::check_permutation(&record.lead_order)?;
    if let Some(labels) = &record.labels {
        if let Some(&bad) = labels.bits.iter().find(|&&b| b > 1) {
            return Err(EcgDataError::BadLabelBit(bad));
        }
    }

    let mut payload = Vec::with_capacity(NUM_LEADS * record.samples() * 4);
    for v in record.signal.as_slice() {
        payload.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    let sha = hex::encode(Sha256::digest(&payload));

    let sidecar = Sidecar {
        subject_id: record.subject_id.clone(),
        record_id: record.record_id.clone(),
        fs: record.fs,
        n_samples: record.samples(),
        lead_order: record.lead_order.iter().map(|l| l.name().to_string()).collect(),
        labels: record.labels.as_ref().map(|l| l.bits.clone()),
        vocabulary_hash: record
            .labels
            .as_ref()
            .map(|l| format!("{:016x}", l.vocabulary_hash)),
        provenance: record.provenance.clone(),
        payload_sha256: sha,
    };

    let base = base_path(path);
    if let Some(parent) = base.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(io_err(&base))?;
        }
    }
    let json_path = base.with_extension("ecgjson");
    let payload_path = base.with_extension("ecgf32");
    let mut text = serde_json::to_string_pretty(&sidecar)?;
    text.push('\n');
    fs::write(&json_path, text).map_err(io_err(&json_path))?;
    fs::write(&payload_path, payload).map_err(io_err(&payload_path))?;
    Ok(())
}

/// Load a record pair, verifying payload size and checksum, and reorder
/// rows into canonical lead order.
pub fn load_record(path: &Path) -> Result<EcgRecord> {
    let base = base_path(path);
    let json_path = base.with_extension("ecgjson");
    let payload_path = base.with_extension("ecgf32");

    let text = fs::read_to_string(&json_path).map_err(io_err(&json_path))?;
    let sidecar: Sidecar = serde_json::from_str(&text)?;

    if sidecar.fs == 0 {
        return Err(EcgDataError::BadSamplingRate);
    }
    if sidecar.n_samples == 0 {
        return Err(EcgDataError::EmptySignal);
    }
    let lead_order: Vec<LeadId> = sidecar
        .lead_order
        .iter()
        .map(|s| LeadId::parse(s))
        .collect::<Result<_>>()?;
    crate::lead::check_permutation(&lead_order)?;

    let payload = fs::read(&payload_path).map_err(io_err(&payload_path))?;
    let expected = NUM_LEADS * sidecar.n_samples * 4;
    if payload.len() != expected {
        return Err(EcgDataError::PayloadSizeMismatch {
            expected,
            actual: payload.len(),
        });
    }
    let actual_sha = hex::encode(Sha256::digest(&payload));
    if actual_sha != sidecar.payload_sha256 {
        return Err(EcgDataError::ChecksumMismatch {
            expected: sidecar.payload_sha256,
            actual: actual_sha,
        });
    }

    let data: Vec<f64> = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    let signal = LeadMatrix::from_flat(sidecar.n_samples, data)?;

    let labels = match (sidecar.labels, sidecar.vocabulary_hash) {
        (Some(bits), Some(hash_hex)) => {
            let vocabulary_hash = u64::from_str_radix(&hash_hex, 16)
                .map_err(|_| EcgDataError::BadCsv(format!("bad vocabulary hash {hash_hex:?}")))?;
            Some(LabelVector { bits, vocabulary_hash })
        }
        (Some(bits), None) => Some(LabelVector { bits, vocabulary_hash: 0 }),
        _ => None,
    };

    let mut record = EcgRecord {
        subject_id: sidecar.subject_id,
        record_id: sidecar.record_id,
        fs: sidecar.fs,
        signal,
        labels,
        lead_order,
        provenance: sidecar.provenance,
    };
    record.canonicalize()?;
    Ok(record)
}
