//! The preprocessing pipeline applied to every record before training:
//! reorder leads to the canonical sequence, impute NaNs from neighbor
//! windows, resample to the target rate by Fourier interpolation, and
//! optionally z-score each lead.

mod impute;
mod resample;
mod zscore;

pub use impute::impute_nan;
pub use resample::fourier_resample;
pub use zscore::zscore_per_lead;

use ecg_data::{EcgRecord, LeadId, LeadMatrix, NUM_LEADS};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Result<T> = std::result::Result<T, PreprocessError>;

#[derive(Debug, Error)]
pub enum PreprocessError {
    #[error(transparent)]
    Data(#[from] ecg_data::EcgDataError),

    #[error("series is entirely NaN; nothing to impute from")]
    AllNan,

    #[error("non-finite input to {0}; imputation must run first")]
    NonFinite(&'static str),

    #[error("resample needs at least 2 samples, got {0}")]
    TooShort(usize),

    #[error("sampling rates must be positive")]
    BadRate,

    #[error("invalid config: {0}")]
    BadConfig(String),
}

/// Knobs for [`preprocess_record`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PreprocessConfig {
    /// Target sampling rate in Hz.
    pub target_fs: u32,
    /// Half-width, in samples, of the imputation neighbor window.
    pub nan_window: usize,
    /// Apply per-lead z-score normalization as the final stage.
    pub zscore: bool,
    /// Variance floor for the z-score divisor.
    pub eps: f64,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            target_fs: 500,
            nan_window: 5,
            zscore: false,
            eps: 1e-8,
        }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<()> {
        if self.target_fs == 0 {
            return Err(PreprocessError::BadConfig("target_fs must be > 0".into()));
        }
        if self.nan_window == 0 {
            return Err(PreprocessError::BadConfig("nan_window must be ≥ 1".into()));
        }
        if !(self.eps > 0.0) {
            return Err(PreprocessError::BadConfig("eps must be > 0".into()));
        }
        Ok(())
    }
}

/// Pipeline stages in the order they must run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Reorder,
    Impute,
    Resample,
    Zscore,
}

/// Reindex a 12×T matrix so row i holds the lead with canonical index i.
pub fn reorder_leads(signal: &LeadMatrix, stored_order: &[LeadId]) -> Result<LeadMatrix> {
    Ok(signal.reordered(stored_order)?)
}

/// Run the full pipeline: reorder → impute → resample → optional z-score.
pub fn preprocess_record(record: &EcgRecord, cfg: &PreprocessConfig) -> Result<EcgRecord> {
    preprocess_record_traced(record, cfg).map(|(rec, _)| rec)
}

/// Same as [`preprocess_record`] but also reports which stages ran, in order.
pub fn preprocess_record_traced(
    record: &EcgRecord,
    cfg: &PreprocessConfig,
) -> Result<(EcgRecord, Vec<Stage>)> {
    cfg.validate()?;
    let mut trace = Vec::new();

    trace.push(Stage::Reorder);
    let canonical = reorder_leads(&record.signal, &record.lead_order)?;

    trace.push(Stage::Impute);
    let samples = canonical.samples();
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(NUM_LEADS);
    for i in 0..NUM_LEADS {
        rows.push(impute_nan(canonical.row_by_index(i), cfg.nan_window)?);
    }

    trace.push(Stage::Resample);
    if record.fs != cfg.target_fs {
        for row in &mut rows {
            *row = fourier_resample(row, record.fs as f64, cfg.target_fs as f64)?;
        }
    } else {
        // Identity by contract; lengths untouched.
        debug_assert!(rows.iter().all(|r| r.len() == samples));
    }

    let mut signal = LeadMatrix::from_rows(rows)?;

    if cfg.zscore {
        trace.push(Stage::Zscore);
        signal = zscore_per_lead(&signal, cfg.eps);
    }

    let out = EcgRecord {
        subject_id: record.subject_id.clone(),
        record_id: record.record_id.clone(),
        fs: cfg.target_fs,
        signal,
        labels: record.labels.clone(),
        lead_order: LeadId::ALL.to_vec(),
        provenance: record.provenance.clone(),
    };
    Ok((out, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ecg_data::LeadMatrix;

    fn record_500hz(samples: usize) -> EcgRecord {
        let mut m = LeadMatrix::zeros(samples);
        for i in 0..NUM_LEADS {
            for t in 0..samples {
                m.row_by_index_mut(i)[t] = ((i + 1) as f64 * 0.1) * (t as f64 * 0.7).sin();
            }
        }
        EcgRecord::new("s", "r", 500, m).unwrap()
    }

    #[test]
    fn identity_path_returns_identical_record() {
        let rec = record_500hz(64);
        let cfg = PreprocessConfig::default();
        let out = preprocess_record(&rec, &cfg).unwrap();
        assert_eq!(out, rec);
    }

    #[test]
    fn resamples_250_to_500_doubles_length() {
        let mut rec = record_500hz(500);
        rec.fs = 250;
        let out = preprocess_record(&rec, &PreprocessConfig::default()).unwrap();
        assert_eq!(out.fs, 500);
        assert_eq!(out.samples(), 1000);
    }

    #[test]
    fn stage_order_is_fixed() {
        let mut rec = record_500hz(100);
        rec.fs = 250;
        let cfg = PreprocessConfig {
            zscore: true,
            ..PreprocessConfig::default()
        };
        let (_, trace) = preprocess_record_traced(&rec, &cfg).unwrap();
        assert_eq!(
            trace,
            vec![Stage::Reorder, Stage::Impute, Stage::Resample, Stage::Zscore]
        );
        let (_, trace_nz) = preprocess_record_traced(&rec, &PreprocessConfig::default()).unwrap();
        assert_eq!(trace_nz, vec![Stage::Reorder, Stage::Impute, Stage::Resample]);
    }

    #[test]
    fn output_never_contains_nan() {
        let mut rec = record_500hz(200);
        // Sprinkle NaNs across several leads.
        for (i, t) in [(0usize, 3usize), (5, 0), (11, 199), (7, 100), (7, 101)] {
            rec.signal.row_by_index_mut(i)[t] = f64::NAN;
        }
        rec.fs = 360;
        let out = preprocess_record(&rec, &PreprocessConfig::default()).unwrap();
        assert!(!out.signal.has_non_finite());
        assert_eq!(out.fs, 500);
    }
}
