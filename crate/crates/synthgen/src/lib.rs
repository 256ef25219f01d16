//! Parametric synthetic 12-lead ECG generator. A rotating cardiac
//! dipole traces sum-of-Gaussian waves on the beat phase circle; lead
//! signals are dot products with fixed electrode direction vectors, and
//! the four derived limb leads follow the Einthoven/Goldberger
//! identities exactly. Pathologies (rate changes, axis rotation,
//! regional ST offsets) are injected with known ground truth, which is
//! what makes the generator usable as an oracle.

mod dataset;
mod dipole;
mod pathology;
mod projection;

pub use dataset::{gen_dataset, GeneratorConfig};
pub use dipole::{gen_dipole, DipoleParams, DipoleTrajectory, WaveParams, WAVE_NAMES};
pub use pathology::{st_phase_window, Pathology, ST_END_FACTOR, ST_START_FACTOR};
pub use projection::{derive_full, project_leads, project_measured, LeadProjection, MEASURED_LEADS};

use thiserror::Error;

pub type Result<T> = std::result::Result<T, SynthError>;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error(transparent)]
    Data(#[from] ecg_data::EcgDataError),

    #[error("invalid generator parameter: {0}")]
    BadParams(String),

    #[error("unknown pathology label {0:?}")]
    UnknownPathology(String),

    #[error("pathology probability for {label} must lie in [0,1], got {p}")]
    BadProbability { label: String, p: f64 },

    #[error("dataset must contain at least one record")]
    EmptyDataset,

    #[error("pathology mix must not be empty")]
    EmptyMix,
}
