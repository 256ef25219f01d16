use crate::{EcgDataError, Result};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Record path (base name without extension) or record id.
    pub path: String,
    pub subject_id: String,
    pub split: Split,
}

/// Train/test assignment for a dataset, partitioned at the subject level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub seed: u64,
    pub test_fraction: f64,
    pub train_count: usize,
    pub test_count: usize,
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text).map_err(|source| EcgDataError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<DatasetManifest> {
        let text = std::fs::read_to_string(path).map_err(|source| EcgDataError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn split_paths(&self, split: Split) -> Vec<&str> {
        self.entries
            .iter()
            .filter(|e| e.split == split)
            .map(|e| e.path.as_str())
            .collect()
    }

    pub fn subjects(&self, split: Split) -> BTreeSet<&str> {
        self.entries
            .iter()
            .filter(|e| e.split == split)
            .map(|e| e.subject_id.as_str())
            .collect()
    }
}

/// Partition records into train/test by subject.
///
/// The unique subject list is sorted, shuffled by a PRNG seeded with
/// `seed`, and the first ⌈test_fraction · S⌉ subjects become the test
/// set. Every record of a subject lands in that subject's split, so
/// the partition is leakage-free by construction.
pub fn split_by_subject(
    records: &[(String, String)],
    test_fraction: f64,
    seed: u64,
) -> Result<DatasetManifest> {
    if records.is_empty() {
        return Err(EcgDataError::EmptyRecordList);
    }
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(EcgDataError::BadTestFraction(test_fraction));
    }

    let mut subjects: Vec<&str> = records
        .iter()
        .map(|(_, s)| s.as_str())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    subjects.shuffle(&mut rng);

    let n_test = (test_fraction * subjects.len() as f64).ceil() as usize;
    let test_subjects: BTreeSet<&str> = subjects.iter().take(n_test).copied().collect();

    let entries: Vec<ManifestEntry> = records
        .iter()
        .map(|(path, subject)| ManifestEntry {
            path: path.clone(),
            subject_id: subject.clone(),
            split: if test_subjects.contains(subject.as_str()) {
                Split::Test
            } else {
                Split::Train
            },
        })
        .collect();
    let test_count = entries.iter().filter(|e| e.split == Split::Test).count();

    Ok(DatasetManifest {
        seed,
        test_fraction,
        train_count: entries.len() - test_count,
        test_count,
        entries,
    })
}
