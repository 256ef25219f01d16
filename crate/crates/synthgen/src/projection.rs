use crate::dipole::DipoleTrajectory;
use ecg_data::{LeadId, LeadMatrix};
use serde::{Deserialize, Serialize};

/// The eight independently measured leads; the other four are derived.
pub const MEASURED_LEADS: [LeadId; 8] = [
    LeadId::I,
    LeadId::II,
    LeadId::V1,
    LeadId::V2,
    LeadId::V3,
    LeadId::V4,
    LeadId::V5,
    LeadId::V6,
];

/// Electrode direction vectors. Limb leads live in the frontal plane
/// (z = 0); the precordials sweep from a strongly anterior V1/V2 view
/// to a lateral V6. V3 deliberately carries only a weak anterior
/// component so the V1/V5 pair is the better window on z.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeadProjection {
    pub lead_i: [f64; 3],
    pub lead_ii: [f64; 3],
    /// V1..V6 in order.
    pub precordial: [[f64; 3]; 6],
}

fn unit(v: [f64; 3]) -> [f64; 3] {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

impl Default for LeadProjection {
    fn default() -> Self {
        LeadProjection {
            lead_i: unit([1.0, 0.0, 0.0]),
            lead_ii: unit([0.5, 0.866, 0.0]),
            precordial: [
                unit([-0.30, 0.10, 0.95]),
                unit([-0.10, 0.15, 0.98]),
                unit([0.30, 0.25, 0.15]),
                unit([0.60, 0.30, 0.50]),
                unit([0.85, 0.25, 0.45]),
                unit([0.95, 0.20, 0.15]),
            ],
        }
    }
}

fn dot_series(traj: &DipoleTrajectory, v: &[f64; 3]) -> Vec<f64> {
    traj.points
        .iter()
        .map(|p| p[0] * v[0] + p[1] * v[1] + p[2] * v[2])
        .collect()
}

/// Project onto the eight measured leads, ordered as [`MEASURED_LEADS`].
pub fn project_measured(traj: &DipoleTrajectory, proj: &LeadProjection) -> [Vec<f64>; 8] {
    [
        dot_series(traj, &proj.lead_i),
        dot_series(traj, &proj.lead_ii),
        dot_series(traj, &proj.precordial[0]),
        dot_series(traj, &proj.precordial[1]),
        dot_series(traj, &proj.precordial[2]),
        dot_series(traj, &proj.precordial[3]),
        dot_series(traj, &proj.precordial[4]),
        dot_series(traj, &proj.precordial[5]),
    ]
}

/// Assemble the full 12-lead matrix in canonical order. The derived
/// limb leads follow the Einthoven/Goldberger identities exactly:
/// III = II − I, aVR = −(I+II)/2, aVL = I − II/2, aVF = II − I/2.
pub fn derive_full(measured: &[Vec<f64>; 8]) -> LeadMatrix {
    let t = measured[0].len();
    let mut m = LeadMatrix::zeros(t);
    let (i, ii) = (&measured[0], &measured[1]);
    m.lead_mut(LeadId::I).copy_from_slice(i);
    m.lead_mut(LeadId::II).copy_from_slice(ii);
    for s in 0..t {
        let (a, b) = (i[s], ii[s]);
        m.lead_mut(LeadId::III)[s] = b - a;
        m.lead_mut(LeadId::AVR)[s] = -(a + b) / 2.0;
        m.lead_mut(LeadId::AVL)[s] = a - b / 2.0;
        m.lead_mut(LeadId::AVF)[s] = b - a / 2.0;
    }
    for (k, lead) in [LeadId::V1, LeadId::V2, LeadId::V3, LeadId::V4, LeadId::V5, LeadId::V6]
        .iter()
        .enumerate()
    {
        m.lead_mut(*lead).copy_from_slice(&measured[k + 2]);
    }
    m
}

/// Project a dipole trajectory to all 12 leads in canonical order.
pub fn project_leads(traj: &DipoleTrajectory, proj: &LeadProjection) -> LeadMatrix {
    derive_full(&project_measured(traj, proj))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dipole::{gen_dipole, DipoleParams};

    fn toy_trajectory() -> DipoleTrajectory {
        gen_dipole(&DipoleParams::default(), 1.0, 200, 5).unwrap()
    }

    #[test]
    fn einthoven_and_goldberger_identities_hold_exactly() {
        let m = project_leads(&toy_trajectory(), &LeadProjection::default());
        let t = m.samples();
        for s in 0..t {
            let i = m.lead(LeadId::I)[s];
            let ii = m.lead(LeadId::II)[s];
            assert_eq!(m.lead(LeadId::III)[s], ii - i);
            assert!((m.lead(LeadId::AVR)[s] + (i + ii) / 2.0).abs() < 1e-12);
            assert!((m.lead(LeadId::AVL)[s] - (i - ii / 2.0)).abs() < 1e-12);
            assert!((m.lead(LeadId::AVF)[s] - (ii - i / 2.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn x_aligned_trajectory_appears_on_lead_i() {
        let traj = DipoleTrajectory {
            points: vec![[0.5, 0.0, 0.0], [1.0, 0.0, 0.0], [-0.25, 0.0, 0.0]],
            phases: vec![0.0; 3],
        };
        let proj = LeadProjection::default();
        let m = project_leads(&traj, &proj);
        assert_eq!(m.lead(LeadId::I), &[0.5, 1.0, -0.25]);
    }

    #[test]
    fn default_amplitudes_stay_sane() {
        let m = project_leads(&toy_trajectory(), &LeadProjection::default());
        for v in m.as_slice() {
            assert!(v.abs() < 5.0, "amplitude {v} out of range");
        }
    }
}
