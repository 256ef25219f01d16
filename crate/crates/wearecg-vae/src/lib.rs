//! The WearECG model: mask a 12-lead record down to a handful of kept
//! leads, encode the zero-masked tensor to a per-timestep Gaussian
//! latent, sample with the reparameterization trick, and decode back to
//! all 12 leads. Training optimizes reconstruction MSE plus a
//! β-weighted KL term under a OneCycle AdamW schedule.

mod loss;
mod mask;
mod model;
mod reconstruct;
mod train;

pub use loss::{kl_divergence, kl_divergence_graph, recon_loss, total_loss, LossParts};
pub use mask::{mask_leads, MaskSpec};
pub use model::{
    reparameterize, reparameterize_graph, sample_eps, LatentGaussian, VaeDescriptor, VaeModel,
    LOGVAR_CLAMP,
};
pub use reconstruct::{reconstruct, ReconstructMode};
pub use train::{
    load_model, manifest_sha256, train, CheckpointMeta, EpochSummary, TrainConfig, TrainOutcome,
};

use thiserror::Error;

pub type Result<T> = std::result::Result<T, VaeError>;

#[derive(Debug, Error)]
pub enum VaeError {
    #[error(transparent)]
    Data(#[from] ecg_data::EcgDataError),

    #[error(transparent)]
    Nn(#[from] nn_core::NnError),

    #[error("invalid descriptor: {0}")]
    BadDescriptor(String),

    #[error("mask keep set must name between 1 and 12 leads")]
    BadMask,

    #[error("temporal length {t} not divisible by downsample factor {factor}")]
    IndivisibleLength { t: usize, factor: usize },

    #[error("record is not preprocessed: fs = {0}, expected 500")]
    Unpreprocessed(u32),

    #[error("training set is empty")]
    EmptyTrainingSet,

    #[error("records disagree on length: {0} vs {1}")]
    InconsistentLengths(usize, usize),

    #[error("non-finite loss at step {step}")]
    NonFiniteLoss { step: u64 },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
}
