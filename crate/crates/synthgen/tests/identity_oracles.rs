//! The generator's lead algebra is the reconstruction oracle for the
//! whole artifact, so the identities get their own battery.

use ecg_data::LeadId;
use proptest::prelude::*;
use synthgen::{gen_dataset, DipoleParams, GeneratorConfig};

fn noiseless_cfg(seed: u64, mix: &[(&str, f64)]) -> GeneratorConfig {
    GeneratorConfig {
        n_subjects: 2,
        records_per_subject: 2,
        seed,
        base: DipoleParams {
            noise_std: 0.0,
            ..DipoleParams::default()
        },
        pathology_mix: mix.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        ..GeneratorConfig::default()
    }
}

fn max_identity_residual(signal: &ecg_data::LeadMatrix) -> f64 {
    let mut worst: f64 = 0.0;
    for s in 0..signal.samples() {
        let i = signal.lead(LeadId::I)[s];
        let ii = signal.lead(LeadId::II)[s];
        worst = worst
            .max((signal.lead(LeadId::III)[s] - (ii - i)).abs())
            .max((signal.lead(LeadId::AVR)[s] + (i + ii) / 2.0).abs())
            .max((signal.lead(LeadId::AVL)[s] - (i - ii / 2.0)).abs())
            .max((signal.lead(LeadId::AVF)[s] - (ii - i / 2.0)).abs());
    }
    worst
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    // Identities must hold on every noiseless record, including records
    // with injected pathologies.
    #[test]
    fn identities_hold_for_all_noiseless_records(
        seed in any::<u64>(),
        p_mi in 0.0f64..1.0,
        p_rate in 0.0f64..1.0,
    ) {
        let cfg = noiseless_cfg(
            seed,
            &[
                ("MI_INFERIOR", p_mi),
                ("MI_LATERAL", p_mi),
                ("MI_SEPTAL", p_mi),
                ("MI_ANTEROLATERAL", p_mi),
                ("TACHY", p_rate),
                ("AXIS_DEV", p_rate),
            ],
        );
        for record in gen_dataset(&cfg).unwrap() {
            prop_assert!(max_identity_residual(&record.signal) <= 1e-9);
        }
    }
}

#[test]
fn noisy_records_break_identities_but_stay_bounded() {
    // Per-lead noise is applied after derivation, so the identities only
    // hold to noise scale — that asymmetry is what reconstruction can win.
    let cfg = GeneratorConfig {
        n_subjects: 2,
        records_per_subject: 1,
        ..GeneratorConfig::default()
    };
    let records = gen_dataset(&cfg).unwrap();
    for r in &records {
        let resid = max_identity_residual(&r.signal);
        assert!(resid > 1e-6, "expected noise-scale residual, got {resid}");
        assert!(resid < 0.5, "residual {resid} implausibly large");
    }
}

#[test]
fn amplitudes_within_five_millivolts() {
    let cfg = GeneratorConfig {
        n_subjects: 6,
        records_per_subject: 3,
        pathology_mix: [("MI_ANTEROLATERAL".to_string(), 0.5), ("TACHY".to_string(), 0.5)]
            .into_iter()
            .collect(),
        ..GeneratorConfig::default()
    };
    for record in gen_dataset(&cfg).unwrap() {
        for v in record.signal.as_slice() {
            assert!(v.abs() <= 5.0);
        }
    }
}
