use crate::loss::total_loss;
use crate::mask::MaskSpec;
use crate::model::{reparameterize_graph, sample_eps, VaeDescriptor, VaeModel};
use crate::{Result, VaeError};
use ecg_data::{load_record, DatasetManifest, Split, NUM_LEADS};
use nn_core::{
    adamw_step, derive_seed, load_tensors, onecycle_lr, save_tensors, AdamW, Graph, LrSchedule,
    OptimizerState,
};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub lr_initial: f64,
    pub lr_max: f64,
    /// Defaults to lr_initial / 10 when unset.
    pub lr_final: Option<f64>,
    pub pct_warmup: f64,
    pub beta_kl: f64,
    pub weight_decay: f64,
    pub seed: u64,
    pub checkpoint_dir: PathBuf,
    /// Early stopping on validation recon loss (epochs without
    /// improvement). Off by default; the validation set is the
    /// manifest's test split.
    pub early_stop_patience: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 16,
            epochs: 10,
            lr_initial: 1e-5,
            lr_max: 5e-5,
            lr_final: None,
            pct_warmup: 0.2,
            beta_kl: 1e-4,
            weight_decay: 0.01,
            seed: 0,
            checkpoint_dir: PathBuf::from("checkpoints"),
            early_stop_patience: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochSummary {
    pub epoch: usize,
    pub steps: u64,
    pub mean_recon: f64,
    pub mean_kl: f64,
    pub mean_total: f64,
}

/// Sidecar metadata written next to every checkpoint.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub descriptor: VaeDescriptor,
    pub train_config: TrainConfig,
    pub mask: MaskSpec,
    pub manifest_sha256: String,
    pub epoch: usize,
    pub global_step: u64,
    pub model_sha256: String,
}

pub struct TrainOutcome {
    pub model: VaeModel,
    pub checkpoints: Vec<PathBuf>,
    pub log_path: PathBuf,
    pub epochs: Vec<EpochSummary>,
}

#[derive(Serialize)]
struct StepLog<'a> {
    kind: &'a str,
    step: u64,
    lr: f64,
    recon: f64,
    kl: f64,
    total: f64,
}

#[derive(Serialize)]
struct EpochLog<'a> {
    kind: &'a str,
    epoch: usize,
    mean_recon: f64,
    mean_kl: f64,
    mean_total: f64,
    checkpoint: &'a str,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> VaeError + '_ {
    move |source| VaeError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn manifest_sha256(manifest: &DatasetManifest) -> String {
    let bytes = serde_json::to_vec(manifest).expect("manifest serializes");
    hex::encode(Sha256::digest(bytes))
}

/// Cached training signals, quantized to the storage f32 grid.
struct RecordCache {
    signals: Vec<Vec<f32>>,
    t: usize,
}

fn load_split(
    manifest: &DatasetManifest,
    base_dir: &Path,
    split: Split,
    factor: usize,
) -> Result<RecordCache> {
    let mut signals = Vec::new();
    let mut t_common: Option<usize> = None;
    for path in manifest.split_paths(split) {
        let resolved = if Path::new(path).is_absolute() {
            PathBuf::from(path)
        } else {
            base_dir.join(path)
        };
        let record = load_record(&resolved)?;
        let t = record.samples();
        match t_common {
            None => t_common = Some(t),
            Some(prev) if prev != t => return Err(VaeError::InconsistentLengths(prev, t)),
            _ => {}
        }
        signals.push(record.signal.as_slice().iter().map(|&v| v as f32).collect());
    }
    let t = t_common.ok_or(VaeError::EmptyTrainingSet)?;
    if t % factor != 0 {
        return Err(VaeError::IndivisibleLength { t, factor });
    }
    Ok(RecordCache { signals, t })
}

fn batch_tensor(cache: &RecordCache, indices: &[usize]) -> Vec<f64> {
    let span = NUM_LEADS * cache.t;
    let mut out = Vec::with_capacity(indices.len() * span);
    for &i in indices {
        out.extend(cache.signals[i].iter().map(|&v| v as f64));
    }
    out
}

/// Sibling paths derived from a checkpoint base ("epoch_000"). Bases
/// stay extension-free so `with_extension` never clobbers a sibling.
fn optim_base(base: &Path) -> PathBuf {
    let name = base.file_name().unwrap_or_default().to_string_lossy();
    base.with_file_name(format!("{name}_optim"))
}

fn meta_path(base: &Path) -> PathBuf {
    let name = base.file_name().unwrap_or_default().to_string_lossy();
    base.with_file_name(format!("{name}_meta.json"))
}

fn save_checkpoint(
    dir: &Path,
    epoch: usize,
    model: &VaeModel,
    state: &OptimizerState,
    meta: &CheckpointMeta,
) -> Result<PathBuf> {
    let base = dir.join(format!("epoch_{epoch:03}"));
    save_tensors(&model.store.export(), &base)?;
    save_tensors(&state.export(&model.store), &optim_base(&base))?;
    let meta_file = meta_path(&base);
    let mut text = serde_json::to_string_pretty(meta)?;
    text.push('\n');
    std::fs::write(&meta_file, text).map_err(io_err(&meta_file))?;
    Ok(base)
}

/// Load a checkpoint written by [`train`]: parameters plus metadata.
pub fn load_model(base: &Path) -> Result<(VaeModel, CheckpointMeta)> {
    let meta_file = meta_path(base);
    let text = std::fs::read_to_string(&meta_file).map_err(io_err(&meta_file))?;
    let meta: CheckpointMeta = serde_json::from_str(&text)?;
    let mut model = VaeModel::new(meta.descriptor.clone(), 0)?;
    let (_, tensors) = load_tensors(base)?;
    model.store.import(&tensors)?;
    Ok((model, meta))
}

/// Mean-mode validation recon loss over a cached split.
fn validation_recon(model: &VaeModel, cache: &RecordCache, mask: &MaskSpec, batch: usize) -> Result<f64> {
    let span = NUM_LEADS * cache.t;
    let mut total = 0.0;
    let mut count = 0usize;
    let indices: Vec<usize> = (0..cache.signals.len()).collect();
    for chunk in indices.chunks(batch) {
        let full = batch_tensor(cache, chunk);
        let mut masked = full.clone();
        mask.apply_flat(&mut masked, chunk.len(), cache.t);
        let mut g = Graph::new();
        let x = g.constant(vec![chunk.len(), NUM_LEADS, cache.t], masked);
        let target = g.constant(vec![chunk.len(), NUM_LEADS, cache.t], full);
        let (mu, _) = model.encode_graph(&mut g, x)?;
        let x_hat = model.decode_graph(&mut g, mu)?;
        let l = g.mse(x_hat, target)?;
        total += g.scalar(l) * (chunk.len() * span) as f64;
        count += chunk.len() * span;
    }
    Ok(total / count as f64)
}

/// Train a model on the manifest's train split. Per step:
/// mask → encode → reparameterize → decode → total loss → backward →
/// AdamW with the OneCycle learning rate. A checkpoint lands at the end
/// of every epoch and the JSON-lines log gets one object per step plus
/// an epoch summary.
pub fn train(
    manifest: &DatasetManifest,
    base_dir: &Path,
    mask: &MaskSpec,
    descriptor: &VaeDescriptor,
    cfg: &TrainConfig,
    resume_from: Option<&Path>,
) -> Result<TrainOutcome> {
    descriptor.validate()?;
    let mut model = VaeModel::new(descriptor.clone(), derive_seed(cfg.seed, 0x11117))?;
    let cache = load_split(manifest, base_dir, Split::Train, model.downsample_factor())?;
    let n = cache.signals.len();
    let steps_per_epoch = n.div_ceil(cfg.batch_size) as u64;
    let total_steps = steps_per_epoch * cfg.epochs as u64;
    let sched = LrSchedule {
        total_steps,
        lr_initial: cfg.lr_initial,
        lr_max: cfg.lr_max,
        lr_final: cfg.lr_final.unwrap_or(cfg.lr_initial / 10.0),
        pct_warmup: cfg.pct_warmup,
    };
    sched.validate()?;

    let hyper = AdamW {
        lr: cfg.lr_initial,
        weight_decay: cfg.weight_decay,
        ..AdamW::default()
    };
    let mut state = OptimizerState::new(&model.store, hyper);

    let mut start_epoch = 0usize;
    let mut global_step = 0u64;
    if let Some(base) = resume_from {
        let (restored, meta) = load_model(base)?;
        model = restored;
        let (_, optim_tensors) = load_tensors(&optim_base(base))?;
        state = OptimizerState::new(&model.store, hyper);
        state.import(&model.store, &optim_tensors, meta.global_step)?;
        start_epoch = meta.epoch + 1;
        global_step = meta.global_step;
    }

    std::fs::create_dir_all(&cfg.checkpoint_dir).map_err(io_err(&cfg.checkpoint_dir))?;
    let log_path = cfg.checkpoint_dir.join("train_log.jsonl");
    let mut log = std::io::BufWriter::new(
        std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(&log_path)
            .map_err(io_err(&log_path))?,
    );

    let manifest_hash = manifest_sha256(manifest);
    let validation = if cfg.early_stop_patience.is_some() {
        Some(load_split(manifest, base_dir, Split::Test, model.downsample_factor())?)
    } else {
        None
    };
    let mut best_val = f64::INFINITY;
    let mut epochs_without_improvement = 0usize;

    let mut checkpoints = Vec::new();
    let mut summaries = Vec::new();
    let latent = model.descriptor.latent_channels;

    for epoch in start_epoch..cfg.epochs {
        let mut order: Vec<usize> = (0..n).collect();
        let mut shuffle_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 0xe90c + epoch as u64));
        order.shuffle(&mut shuffle_rng);

        let (mut sum_recon, mut sum_kl, mut sum_total) = (0.0, 0.0, 0.0);
        let mut steps_this_epoch = 0u64;

        for chunk in order.chunks(cfg.batch_size) {
            let b = chunk.len();
            let full = batch_tensor(&cache, chunk);
            let mut masked = full.clone();
            mask.apply_flat(&mut masked, b, cache.t);

            let mut g = Graph::new();
            let x = g.constant(vec![b, NUM_LEADS, cache.t], masked);
            let target = g.constant(vec![b, NUM_LEADS, cache.t], full);
            let (mu, logvar) = model.encode_graph(&mut g, x)?;
            let t_prime = cache.t / model.downsample_factor();
            let eps_data = sample_eps(b * latent * t_prime, derive_seed(cfg.seed, 0x5eed_0000 + global_step));
            let eps = g.constant(vec![b, latent, t_prime], eps_data);
            let z = reparameterize_graph(&mut g, mu, logvar, eps)?;
            let x_hat = model.decode_graph(&mut g, z)?;
            let (loss, parts) = total_loss(&mut g, x_hat, target, mu, logvar, cfg.beta_kl)?;

            if !parts.total.is_finite() {
                log.flush().map_err(io_err(&log_path))?;
                return Err(VaeError::NonFiniteLoss { step: global_step });
            }

            model.store.zero_grads();
            g.backward(loss, &mut model.store)?;
            state.hyper.lr = onecycle_lr(global_step, &sched)?;
            adamw_step(&mut model.store, &mut state)?;

            let line = StepLog {
                kind: "step",
                step: global_step,
                lr: state.hyper.lr,
                recon: parts.recon,
                kl: parts.kl,
                total: parts.total,
            };
            serde_json::to_writer(&mut log, &line)?;
            log.write_all(b"\n").map_err(io_err(&log_path))?;

            sum_recon += parts.recon;
            sum_kl += parts.kl;
            sum_total += parts.total;
            global_step += 1;
            steps_this_epoch += 1;
        }

        let meta = CheckpointMeta {
            descriptor: descriptor.clone(),
            train_config: cfg.clone(),
            mask: mask.clone(),
            manifest_sha256: manifest_hash.clone(),
            epoch,
            global_step,
            model_sha256: model.sha256(),
        };
        let ckpt = save_checkpoint(&cfg.checkpoint_dir, epoch, &model, &state, &meta)?;
        let summary = EpochSummary {
            epoch,
            steps: steps_this_epoch,
            mean_recon: sum_recon / steps_this_epoch as f64,
            mean_kl: sum_kl / steps_this_epoch as f64,
            mean_total: sum_total / steps_this_epoch as f64,
        };
        let line = EpochLog {
            kind: "epoch",
            epoch,
            mean_recon: summary.mean_recon,
            mean_kl: summary.mean_kl,
            mean_total: summary.mean_total,
            checkpoint: &ckpt.display().to_string(),
        };
        serde_json::to_writer(&mut log, &line)?;
        log.write_all(b"\n").map_err(io_err(&log_path))?;
        log.flush().map_err(io_err(&log_path))?;

        checkpoints.push(ckpt);
        summaries.push(summary);

        if let (Some(patience), Some(val)) = (cfg.early_stop_patience, &validation) {
            let val_recon = validation_recon(&model, val, mask, cfg.batch_size)?;
            if val_recon + 1e-12 < best_val {
                best_val = val_recon;
                epochs_without_improvement = 0;
            } else {
                epochs_without_improvement += 1;
                if epochs_without_improvement >= patience {
                    break;
                }
            }
        }
    }

    Ok(TrainOutcome {
        model,
        checkpoints,
        log_path,
        epochs: summaries,
    })
}
