use crate::dipole::{gen_dipole, mat_mul, rotation_z, DipoleParams};
use crate::pathology::{st_phase_window, Pathology};
use crate::projection::{derive_full, project_measured, LeadProjection, MEASURED_LEADS};
use crate::{Result, SynthError};
use ecg_data::{EcgRecord, LabelVector, Vocabulary};
use nn_core::derive_seed;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeneratorConfig {
    pub n_subjects: usize,
    pub records_per_subject: usize,
    pub duration_s: f64,
    pub fs: u32,
    /// Label name → independent injection probability. "NORMAL" is
    /// accepted but injects nothing; records that draw no pathology are
    /// labeled NORMAL.
    pub pathology_mix: BTreeMap<String, f64>,
    pub base: DipoleParams,
    pub projection: LeadProjection,
    /// ST plateau magnitude in mV.
    pub st_offset_mv: f64,
    /// Per-subject amplitude scale range.
    pub subject_amp_range: (f64, f64),
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        let mut mix = BTreeMap::new();
        mix.insert("NORMAL".to_string(), 1.0);
        GeneratorConfig {
            n_subjects: 10,
            records_per_subject: 3,
            duration_s: 2.0,
            fs: 500,
            pathology_mix: mix,
            base: DipoleParams::default(),
            projection: LeadProjection::default(),
            st_offset_mv: 0.15,
            subject_amp_range: (0.85, 1.15),
            seed: 0,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if self.n_subjects * self.records_per_subject == 0 {
            return Err(SynthError::EmptyDataset);
        }
        if self.pathology_mix.is_empty() {
            return Err(SynthError::EmptyMix);
        }
        for (label, &p) in &self.pathology_mix {
            if label != "NORMAL" && Pathology::from_label(label).is_none() {
                return Err(SynthError::UnknownPathology(label.clone()));
            }
            if !(0.0..=1.0).contains(&p) {
                return Err(SynthError::BadProbability { label: label.clone(), p });
            }
        }
        if !(self.st_offset_mv.is_finite() && self.duration_s > 0.0 && self.fs > 0) {
            return Err(SynthError::BadParams("bad duration/fs/st_offset".into()));
        }
        let (lo, hi) = self.subject_amp_range;
        if !(lo > 0.0 && hi >= lo) {
            return Err(SynthError::BadParams("bad subject_amp_range".into()));
        }
        Ok(())
    }
}

// Stream indices for per-record sub-seeds.
const STREAM_RR: u64 = 1;
const STREAM_NOISE: u64 = 2;
const STREAM_PATHOLOGY: u64 = 3;
const STREAM_SHAPE: u64 = 4;

fn subject_amp_scale(cfg: &GeneratorConfig, subject: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 0x5ab_0000 + subject as u64));
    rng.gen_range(cfg.subject_amp_range.0..cfg.subject_amp_range.1)
}

/// Generate one record deterministically from (config, record index).
fn gen_record(cfg: &GeneratorConfig, vocab: &Vocabulary, index: usize) -> Result<EcgRecord> {
    let subject = index / cfg.records_per_subject;
    let rec_seed = derive_seed(cfg.seed, index as u64);
    let mut pathology_rng = ChaCha8Rng::seed_from_u64(derive_seed(rec_seed, STREAM_PATHOLOGY));

    // Sample pathologies independently, in sorted label order.
    let mut injected: Vec<Pathology> = Vec::new();
    for (label, &p) in &cfg.pathology_mix {
        if label == "NORMAL" {
            continue;
        }
        let u: f64 = pathology_rng.gen();
        if u < p {
            injected.push(Pathology::from_label(label).expect("validated"));
        }
    }
    // A heart can't be fast and slow at once; tachycardia wins.
    if injected.contains(&Pathology::Tachy) {
        injected.retain(|&p| p != Pathology::Brady);
    }

    let mut params = cfg.base.clone();
    let amp_scale = subject_amp_scale(cfg, subject);
    let mut shape_rng = ChaCha8Rng::seed_from_u64(derive_seed(rec_seed, STREAM_SHAPE));
    for w in &mut params.waves {
        for a in &mut w.amplitude {
            let jitter = if cfg.base.amp_jitter > 0.0 {
                shape_rng.gen_range(1.0 - cfg.base.amp_jitter..1.0 + cfg.base.amp_jitter)
            } else {
                1.0
            };
            *a *= amp_scale * jitter;
        }
    }
    for p in &injected {
        match p {
            Pathology::Tachy => params.heart_rate_bpm = pathology_rng.gen_range(100.0..150.0),
            Pathology::Brady => params.heart_rate_bpm = pathology_rng.gen_range(35.0..55.0),
            Pathology::AxisDev => {
                params.axis_rotation =
                    mat_mul(&rotation_z(30f64.to_radians()), &params.axis_rotation)
            }
            _ => {}
        }
    }

    let traj = gen_dipole(&params, cfg.duration_s, cfg.fs, derive_seed(rec_seed, STREAM_RR))?;
    let mut measured = project_measured(&traj, &cfg.projection);

    // Regional ST offsets go into the measured leads only; the derived
    // limb leads inherit them through the identities.
    let (st_lo, st_hi) = st_phase_window(&params);
    for p in injected.iter().filter(|p| p.is_mi()) {
        for lead in p.st_measured_leads() {
            let row_idx = MEASURED_LEADS.iter().position(|l| l == lead).expect("measured");
            let row = &mut measured[row_idx];
            for (s, v) in row.iter_mut().enumerate() {
                let theta = traj.phases[s];
                if theta >= st_lo && theta <= st_hi {
                    *v += cfg.st_offset_mv;
                }
            }
        }
    }

    let mut signal = derive_full(&measured);

    if cfg.base.noise_std > 0.0 {
        let mut noise_rng = ChaCha8Rng::seed_from_u64(derive_seed(rec_seed, STREAM_NOISE));
        let normal = Normal::new(0.0, cfg.base.noise_std).expect("valid normal");
        for v in signal.as_mut_slice() {
            *v += normal.sample(&mut noise_rng);
        }
    }

    let mut names: Vec<&str> = injected.iter().map(|p| p.label()).collect();
    if names.is_empty() {
        names.push("NORMAL");
    }
    let labels = LabelVector::from_names(vocab, &names)?;

    let mut record = EcgRecord::new(
        &format!("S{subject:04}"),
        &format!("S{subject:04}R{:02}", index % cfg.records_per_subject),
        cfg.fs,
        signal,
    )?;
    record.labels = Some(labels);
    Ok(record)
}

/// Generate the whole dataset. Records are derived independently from
/// (seed, record index), so generation parallelizes without changing
/// the output.
pub fn gen_dataset(cfg: &GeneratorConfig) -> Result<Vec<EcgRecord>> {
    cfg.validate()?;
    let vocab = Vocabulary::builtin();
    let total = cfg.n_subjects * cfg.records_per_subject;
    (0..total)
        .into_par_iter()
        .map(|i| gen_record(cfg, &vocab, i))
        .collect()
}
