use crate::{Result, VaeError};
use ecg_data::{LeadId, LeadMatrix, NUM_LEADS};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

/// Which leads survive masking. Everything else is zeroed, matching
/// x_masked = x ⊙ (1 − M) with M zero at the kept leads.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct MaskSpec {
    keep: BTreeSet<LeadId>,
}

impl MaskSpec {
    pub fn new(keep: impl IntoIterator<Item = LeadId>) -> Result<MaskSpec> {
        let keep: BTreeSet<LeadId> = keep.into_iter().collect();
        if keep.is_empty() || keep.len() > NUM_LEADS {
            return Err(VaeError::BadMask);
        }
        Ok(MaskSpec { keep })
    }

    /// The main experiment's kept triad.
    pub fn ii_v1_v5() -> MaskSpec {
        MaskSpec::new([LeadId::II, LeadId::V1, LeadId::V5]).expect("nonempty")
    }

    /// Parse "II,V1,V5"-style lists.
    pub fn parse(text: &str) -> Result<MaskSpec> {
        let leads = text
            .split(',')
            .map(|s| LeadId::parse(s).map_err(VaeError::from))
            .collect::<Result<Vec<_>>>()?;
        MaskSpec::new(leads)
    }

    pub fn contains(&self, lead: LeadId) -> bool {
        self.keep.contains(&lead)
    }

    pub fn kept(&self) -> impl Iterator<Item = LeadId> + '_ {
        self.keep.iter().copied()
    }

    pub fn masked(&self) -> impl Iterator<Item = LeadId> + '_ {
        LeadId::ALL.into_iter().filter(|l| !self.keep.contains(l))
    }

    pub fn names(&self) -> Vec<String> {
        self.keep.iter().map(|l| l.name().to_string()).collect()
    }

    /// Zero masked-lead rows in a flat [B, 12, T] buffer in place.
    pub fn apply_flat(&self, data: &mut [f64], batch: usize, t: usize) {
        debug_assert_eq!(data.len(), batch * NUM_LEADS * t);
        for b in 0..batch {
            for lead in LeadId::ALL {
                if !self.keep.contains(&lead) {
                    let base = (b * NUM_LEADS + lead.index()) * t;
                    data[base..base + t].fill(0.0);
                }
            }
        }
    }
}

impl TryFrom<Vec<String>> for MaskSpec {
    type Error = String;
    fn try_from(names: Vec<String>) -> std::result::Result<MaskSpec, String> {
        let leads = names
            .iter()
            .map(|n| LeadId::parse(n).map_err(|e| e.to_string()))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        MaskSpec::new(leads).map_err(|e| e.to_string())
    }
}

impl From<MaskSpec> for Vec<String> {
    fn from(m: MaskSpec) -> Vec<String> {
        m.names()
    }
}

/// Kept leads pass through; all other rows become exactly zero.
pub fn mask_leads(x: &LeadMatrix, spec: &MaskSpec) -> LeadMatrix {
    let mut out = x.clone();
    spec.apply_flat(out.as_mut_slice(), 1, x.samples());
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(seed: u64, t: usize) -> LeadMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data: Vec<f64> = (0..NUM_LEADS * t).map(|_| rng.gen_range(-2.0..2.0)).collect();
        LeadMatrix::from_flat(t, data).unwrap()
    }

    #[test]
    fn keep_all_is_identity() {
        let x = random_matrix(1, 20);
        let spec = MaskSpec::new(LeadId::ALL).unwrap();
        assert_eq!(mask_leads(&x, &spec), x);
    }

    #[test]
    fn empty_keep_rejected_and_single_lead_kept() {
        assert!(matches!(MaskSpec::new([]), Err(VaeError::BadMask)));
        let x = random_matrix(2, 16);
        let spec = MaskSpec::new([LeadId::II]).unwrap();
        let y = mask_leads(&x, &spec);
        assert_eq!(y.lead(LeadId::II), x.lead(LeadId::II));
        for lead in LeadId::ALL {
            if lead != LeadId::II {
                assert!(y.lead(lead).iter().all(|&v| v == 0.0));
            }
        }
    }

    #[test]
    fn default_triad_keeps_rows_1_6_10() {
        let x = random_matrix(3, 32);
        let y = mask_leads(&x, &MaskSpec::ii_v1_v5());
        for lead in LeadId::ALL {
            if [1, 6, 10].contains(&lead.index()) {
                assert_eq!(y.lead(lead), x.lead(lead));
            } else {
                assert!(y.lead(lead).iter().all(|&v| v == 0.0));
            }
        }
    }

    #[test]
    fn masking_is_idempotent() {
        let x = random_matrix(4, 25);
        let spec = MaskSpec::parse("I,II,V3").unwrap();
        let once = mask_leads(&x, &spec);
        let twice = mask_leads(&once, &spec);
        assert_eq!(once, twice);
    }

    #[test]
    fn parse_round_trips() {
        let spec = MaskSpec::parse("ii,v1,V5").unwrap();
        assert_eq!(spec, MaskSpec::ii_v1_v5());
        assert_eq!(spec.names(), vec!["II", "V1", "V5"]);
        assert!(MaskSpec::parse("II,V9").is_err());
    }
}
