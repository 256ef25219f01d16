use crate::{EcgDataError, Result};
use serde::{Deserialize, Serialize};

/// Label vocabulary shipped with the crate: 6 MI regions plus the
/// rhythm/axis classes the synthetic generator knows how to inject.
pub const BUILTIN_VOCABULARY: &str = include_str!("../data/labels_v1.txt");

/// 64-bit FNV-1a over raw bytes.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h = OFFSET;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(PRIME);
    }
    h
}

/// Ordered label names plus the hash of the vocabulary file they came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    labels: Vec<String>,
    hash: u64,
}

impl Vocabulary {
    /// Parse a vocabulary file: one label per line, `#` comments and blank
    /// lines ignored. The hash binds to the raw file bytes, so any edit —
    /// even to a comment — changes it.
    pub fn parse(text: &str) -> Result<Vocabulary> {
        let labels: Vec<String> = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty())
            .map(|l| l.to_string())
            .collect();
        if labels.is_empty() {
            return Err(EcgDataError::EmptyVocabulary);
        }
        Ok(Vocabulary {
            labels,
            hash: fnv1a64(text.as_bytes()),
        })
    }

    pub fn from_file(path: &std::path::Path) -> Result<Vocabulary> {
        let text = std::fs::read_to_string(path).map_err(|source| EcgDataError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Vocabulary::parse(&text)
    }

    pub fn builtin() -> Vocabulary {
        Vocabulary::parse(BUILTIN_VOCABULARY).expect("builtin vocabulary parses")
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn hash(&self) -> u64 {
        self.hash
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

/// Multi-hot label vector bound to a specific vocabulary by hash.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelVector {
    pub bits: Vec<u8>,
    pub vocabulary_hash: u64,
}

impl LabelVector {
    pub fn zeros(vocab: &Vocabulary) -> LabelVector {
        LabelVector {
            bits: vec![0; vocab.len()],
            vocabulary_hash: vocab.hash(),
        }
    }

    pub fn from_names(vocab: &Vocabulary, names: &[&str]) -> Result<LabelVector> {
        let mut v = LabelVector::zeros(vocab);
        for name in names {
            let idx = vocab
                .index_of(name)
                .ok_or_else(|| EcgDataError::UnknownLabel(name.to_string()))?;
            v.bits[idx] = 1;
        }
        Ok(v)
    }

    pub fn validate(&self, vocab: &Vocabulary) -> Result<()> {
        if self.bits.len() != vocab.len() {
            return Err(EcgDataError::LabelLengthMismatch {
                expected: vocab.len(),
                actual: self.bits.len(),
            });
        }
        if self.vocabulary_hash != vocab.hash() {
            return Err(EcgDataError::VocabularyHashMismatch {
                expected: vocab.hash(),
                actual: self.vocabulary_hash,
            });
        }
        if let Some(&bad) = self.bits.iter().find(|&&b| b > 1) {
            return Err(EcgDataError::BadLabelBit(bad));
        }
        Ok(())
    }

    pub fn is_set(&self, idx: usize) -> bool {
        self.bits.get(idx).copied() == Some(1)
    }

    pub fn names<'a>(&self, vocab: &'a Vocabulary) -> Vec<&'a str> {
        vocab
            .labels()
            .iter()
            .enumerate()
            .filter(|(i, _)| self.is_set(*i))
            .map(|(_, l)| l.as_str())
            .collect()
    }
}
