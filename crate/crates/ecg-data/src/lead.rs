use crate::{EcgDataError, Result};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Number of leads in the standard 12-lead system.
pub const NUM_LEADS: usize = 12;

/// The 12 standard leads in canonical order.
///
/// Canonical indices: I=0, II=1, III=2, aVR=3, aVL=4, aVF=5, V1=6,
/// V2=7, V3=8, V4=9, V5=10, V6=11.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[allow(clippy::upper_case_acronyms)]
pub enum LeadId {
    I,
    II,
    III,
    #[serde(rename = "aVR")]
    AVR,
    #[serde(rename = "aVL")]
    AVL,
    #[serde(rename = "aVF")]
    AVF,
    V1,
    V2,
    V3,
    V4,
    V5,
    V6,
}

impl LeadId {
    pub const ALL: [LeadId; NUM_LEADS] = [
        LeadId::I,
        LeadId::II,
        LeadId::III,
        LeadId::AVR,
        LeadId::AVL,
        LeadId::AVF,
        LeadId::V1,
        LeadId::V2,
        LeadId::V3,
        LeadId::V4,
        LeadId::V5,
        LeadId::V6,
    ];

    /// Canonical row index of this lead.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(idx: usize) -> Option<LeadId> {
        LeadId::ALL.get(idx).copied()
    }

    /// Canonical display name ("aVR" style for the augmented leads).
    pub fn name(self) -> &'static str {
        match self {
            LeadId::I => "I",
            LeadId::II => "II",
            LeadId::III => "III",
            LeadId::AVR => "aVR",
            LeadId::AVL => "aVL",
            LeadId::AVF => "aVF",
            LeadId::V1 => "V1",
            LeadId::V2 => "V2",
            LeadId::V3 => "V3",
            LeadId::V4 => "V4",
            LeadId::V5 => "V5",
            LeadId::V6 => "V6",
        }
    }

    /// Parse a lead name. Case-insensitive ("AVR" == "aVR" == "avr").
    pub fn parse(name: &str) -> Result<LeadId> {
        let up = name.trim().to_ascii_uppercase();
        let lead = match up.as_str() {
            "I" => LeadId::I,
            "II" => LeadId::II,
            "III" => LeadId::III,
            "AVR" => LeadId::AVR,
            "AVL" => LeadId::AVL,
            "AVF" => LeadId::AVF,
            "V1" => LeadId::V1,
            "V2" => LeadId::V2,
            "V3" => LeadId::V3,
            "V4" => LeadId::V4,
            "V5" => LeadId::V5,
            "V6" => LeadId::V6,
            _ => return Err(EcgDataError::UnknownLead(name.to_string())),
        };
        Ok(lead)
    }
}

impl fmt::Display for LeadId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Validate that `order` is a permutation of the 12 leads.
pub(crate) fn check_permutation(order: &[LeadId]) -> Result<()> {
    if order.len() != NUM_LEADS {
        return Err(EcgDataError::BadLeadCount {
            expected: NUM_LEADS,
            actual: order.len(),
        });
    }
    let mut seen = [false; NUM_LEADS];
    for &lead in order {
        if seen[lead.index()] {
            return Err(EcgDataError::DuplicateLead(lead));
        }
        seen[lead.index()] = true;
    }
    for (idx, &present) in seen.iter().enumerate() {
        if !present {
            return Err(EcgDataError::MissingLead(LeadId::from_index(idx).unwrap()));
        }
    }
    Ok(())
}

/// Dense 12 × T signal matrix, row-major, amplitudes in millivolts.
#[derive(Debug, Clone, PartialEq)]
pub struct LeadMatrix {
    samples: usize,
    data: Vec<f64>,
}

impl LeadMatrix {
    pub fn zeros(samples: usize) -> LeadMatrix {
        LeadMatrix {
            samples,
            data: vec![0.0; NUM_LEADS * samples],
        }
    }

    /// Build from 12 rows of equal length.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<LeadMatrix> {
        if rows.len() != NUM_LEADS {
            return Err(EcgDataError::BadLeadCount {
                expected: NUM_LEADS,
                actual: rows.len(),
            });
        }
        let samples = rows[0].len();
        if samples == 0 {
            return Err(EcgDataError::EmptySignal);
        }
        let mut data = Vec::with_capacity(NUM_LEADS * samples);
        for row in &rows {
            if row.len() != samples {
                return Err(EcgDataError::BadCsv(format!(
                    "ragged rows: expected {} samples, found {}",
                    samples,
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Ok(LeadMatrix { samples, data })
    }

    pub fn from_flat(samples: usize, data: Vec<f64>) -> Result<LeadMatrix> {
        if samples == 0 {
            return Err(EcgDataError::EmptySignal);
        }
        if data.len() != NUM_LEADS * samples {
            return Err(EcgDataError::PayloadSizeMismatch {
                expected: NUM_LEADS * samples,
                actual: data.len(),
            });
        }
        Ok(LeadMatrix { samples, data })
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn row_by_index(&self, idx: usize) -> &[f64] {
        &self.data[idx * self.samples..(idx + 1) * self.samples]
    }

    pub fn row_by_index_mut(&mut self, idx: usize) -> &mut [f64] {
        &mut self.data[idx * self.samples..(idx + 1) * self.samples]
    }

    /// Row for a lead, assuming canonical row order.
    pub fn lead(&self, lead: LeadId) -> &[f64] {
        self.row_by_index(lead.index())
    }

    pub fn lead_mut(&mut self, lead: LeadId) -> &mut [f64] {
        self.row_by_index_mut(lead.index())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn has_non_finite(&self) -> bool {
        self.data.iter().any(|v| !v.is_finite())
    }

    /// Reindex rows so that row i holds the lead whose canonical index is i.
    ///
    /// `stored_order[r]` names the lead currently stored in row r.
    pub fn reordered(&self, stored_order: &[LeadId]) -> Result<LeadMatrix> {
        check_permutation(stored_order)?;
        let mut out = LeadMatrix::zeros(self.samples);
        for (row, &lead) in stored_order.iter().enumerate() {
            out.lead_mut(lead).copy_from_slice(self.row_by_index(row));
        }
        Ok(out)
    }
}
