//! Minimal deterministic tensor engine for 1D signal models.
//!
//! A [`Graph`] is a tape of strict-shape f64 tensors supporting
//! reverse-mode gradients over the operations the VAE needs:
//! SAME-padded 1D convolution, group normalization, SiLU, scaled
//! dot-product attention primitives, nearest-neighbor upsampling, and
//! the usual elementwise/reduction glue. Parameters live in a
//! [`ParamStore`]; [`AdamW`] and the OneCycle schedule drive training,
//! and [`grad_check`] compares analytic gradients against central
//! finite differences.
//!
//! Kernels parallelize over disjoint output rows only, so results are
//! bitwise reproducible for any thread count.

mod checkpoint;
mod error;
mod gradcheck;
mod graph;
mod kernels;
mod layers;
mod optim;
mod params;
mod rng;

pub use checkpoint::{load_tensors, save_tensors, tensors_sha256, CheckpointManifest, NamedTensor};
pub use error::NnError;
pub use gradcheck::{grad_check, GradCheckConfig, GradCheckReport};
pub use graph::{Graph, Tensor};
pub use kernels::conv1d_out_len;
pub use layers::{group_count, Conv1d, GroupNorm, Init, Linear, Mhsa, ResBlock, Upsample};
pub use optim::{adamw_step, onecycle_lr, AdamW, LrSchedule, OptimizerState};
pub use params::{ParamId, ParamStore};
pub use rng::{derive_seed, he_uniform, splitmix64};

pub type Result<T> = std::result::Result<T, NnError>;
