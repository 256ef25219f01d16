use ecg_data::{save_record, split_by_subject, DatasetManifest};
use std::path::Path;
use synthgen::{gen_dataset, DipoleParams, GeneratorConfig};
use wearecg_vae::{train, MaskSpec, TrainConfig, VaeDescriptor};

/// Generate a tiny corpus on disk and return its manifest.
fn tiny_corpus(dir: &Path, subjects: usize, per_subject: usize, t_samples: usize) -> DatasetManifest {
    let cfg = GeneratorConfig {
        n_subjects: subjects,
        records_per_subject: per_subject,
        duration_s: t_samples as f64 / 500.0,
        fs: 500,
        seed: 11,
        base: DipoleParams {
            noise_std: 0.01,
            ..DipoleParams::default()
        },
        ..GeneratorConfig::default()
    };
    let records = gen_dataset(&cfg).unwrap();
    let mut keyed = Vec::new();
    for r in &records {
        let rel = format!("records/{}", r.record_id);
        save_record(r, &dir.join(&rel)).unwrap();
        keyed.push((rel, r.subject_id.clone()));
    }
    split_by_subject(&keyed, 0.25, 5).unwrap()
}

fn desk_cfg(dir: &Path, epochs: usize, batch: usize, seed: u64) -> TrainConfig {
    TrainConfig {
        batch_size: batch,
        epochs,
        seed,
        checkpoint_dir: dir.to_path_buf(),
        ..TrainConfig::default()
    }
}

fn count_log_lines(path: &Path, kind: &str) -> usize {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| l.contains(&format!("\"kind\":\"{kind}\"")))
        .count()
}

fn lr_sequence(path: &Path) -> Vec<f64> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| l.contains("\"kind\":\"step\""))
        .map(|l| {
            let v: serde_json::Value = serde_json::from_str(l).unwrap();
            v["lr"].as_f64().unwrap()
        })
        .collect()
}

#[test]
fn one_epoch_on_32_records_logs_two_steps() {
    let dir = tempfile::tempdir().unwrap();
    // 11 subjects × 4 → 44 records; 25% of subjects (3) go to test.
    // Tune counts so the train split holds exactly 32.
    let manifest = tiny_corpus(dir.path(), 11, 4, 64);
    assert_eq!(manifest.train_count, 32, "fixture drifted");
    let cfg = desk_cfg(&dir.path().join("ckpt"), 1, 16, 1);
    let out = train(
        &manifest,
        dir.path(),
        &MaskSpec::ii_v1_v5(),
        &VaeDescriptor::desk(vec![8, 12, 16]),
        &cfg,
        None,
    )
    .unwrap();
    assert_eq!(out.epochs.len(), 1);
    assert_eq!(out.epochs[0].steps, 2);
    assert_eq!(count_log_lines(&out.log_path, "step"), 2);
    assert_eq!(count_log_lines(&out.log_path, "epoch"), 1);
    assert_eq!(out.checkpoints.len(), 1);
    assert!(out.checkpoints[0].with_extension("json").exists());
    assert!(out.checkpoints[0].with_extension("bin").exists());
}

#[test]
fn fixed_seed_gives_bitwise_identical_checkpoints() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = tiny_corpus(dir.path(), 5, 2, 64);
    let run = |tag: &str| {
        let ckpt_dir = dir.path().join(tag);
        let cfg = desk_cfg(&ckpt_dir, 2, 4, 99);
        let out = train(
            &manifest,
            dir.path(),
            &MaskSpec::ii_v1_v5(),
            &VaeDescriptor::desk(vec![8, 12, 16]),
            &cfg,
            None,
        )
        .unwrap();
        std::fs::read(out.checkpoints.last().unwrap().with_extension("bin")).unwrap()
    };
    assert_eq!(run("a"), run("b"));
}

#[test]
fn resume_continues_the_lr_schedule() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = tiny_corpus(dir.path(), 5, 2, 64);
    let mask = MaskSpec::ii_v1_v5();
    let desc = VaeDescriptor::desk(vec![8, 12, 16]);

    let straight_dir = dir.path().join("straight");
    let straight = train(&manifest, dir.path(), &mask, &desc, &desk_cfg(&straight_dir, 3, 4, 7), None).unwrap();
    let straight_lrs = lr_sequence(&straight.log_path);

    let resumed_dir = dir.path().join("resumed");
    let cfg = desk_cfg(&resumed_dir, 3, 4, 7);
    // First epoch only: same config, interrupted by construction.
    let first = train(
        &manifest,
        dir.path(),
        &mask,
        &desc,
        &TrainConfig { epochs: 1, ..cfg.clone() },
        None,
    )
    .unwrap();
    let _ = train(&manifest, dir.path(), &mask, &desc, &cfg, Some(&first.checkpoints[0])).unwrap();
    let resumed_lrs = lr_sequence(&first.log_path);

    assert_eq!(straight_lrs.len(), resumed_lrs.len());
    for (a, b) in straight_lrs.iter().zip(&resumed_lrs) {
        assert_eq!(a, b, "lr sequence diverged after resume");
    }
    // The resumed lr curve picks up past the warm-up peak instead of
    // restarting from lr_initial.
    let steps_per_epoch = straight_lrs.len() / 3;
    assert!(resumed_lrs[steps_per_epoch] > resumed_lrs[0]);
}

#[test]
fn overfit_sanity_beta_zero_single_record() {
    let dir = tempfile::tempdir().unwrap();
    // One record, batch 1: each epoch is one step; 200 epochs = 200 steps.
    let cfg = GeneratorConfig {
        n_subjects: 2,
        records_per_subject: 1,
        duration_s: 64.0 / 500.0,
        fs: 500,
        seed: 3,
        base: DipoleParams { noise_std: 0.0, ..DipoleParams::default() },
        ..GeneratorConfig::default()
    };
    let records = gen_dataset(&cfg).unwrap();
    let mut keyed = Vec::new();
    for r in &records {
        let rel = format!("records/{}", r.record_id);
        save_record(r, &dir.path().join(&rel)).unwrap();
        keyed.push((rel, r.subject_id.clone()));
    }
    let manifest = split_by_subject(&keyed, 0.5, 1).unwrap();
    assert_eq!(manifest.train_count, 1);

    let train_cfg = TrainConfig {
        batch_size: 1,
        epochs: 200,
        lr_initial: 3e-4,
        lr_max: 3e-3,
        beta_kl: 0.0,
        weight_decay: 0.0,
        seed: 5,
        checkpoint_dir: dir.path().join("ckpt"),
        ..TrainConfig::default()
    };
    let out = train(
        &manifest,
        dir.path(),
        &MaskSpec::ii_v1_v5(),
        &VaeDescriptor::desk(vec![8, 16, 32]),
        &train_cfg,
        None,
    )
    .unwrap();
    let first = out.epochs.first().unwrap().mean_recon;
    let last = out.epochs.last().unwrap().mean_recon;
    assert!(
        last < 0.1 * first,
        "recon {last} did not fall below 10% of initial {first}"
    );
}
