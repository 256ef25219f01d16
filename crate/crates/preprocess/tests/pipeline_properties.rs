use preprocess::{fourier_resample, impute_nan};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    // Upsampling zero-pads the spectrum, so downsampling back recovers
    // every original bin: the round trip is the identity for any input.
    #[test]
    fn resample_up_then_down_round_trips(
        n in 8usize..120,
        freq in 1usize..4,
        phase in 0.0f64..6.28,
        ratio in 2usize..4,
    ) {
        let x: Vec<f64> = (0..n)
            .map(|i| (2.0 * std::f64::consts::PI * freq as f64 * i as f64 / n as f64 + phase).sin())
            .collect();
        let up = fourier_resample(&x, 1.0, ratio as f64).unwrap();
        prop_assert_eq!(up.len(), n * ratio);
        let back = fourier_resample(&up, ratio as f64, 1.0).unwrap();
        prop_assert_eq!(back.len(), n);
        for (a, b) in x.iter().zip(&back) {
            prop_assert!((a - b).abs() < 1e-6, "{} vs {}", a, b);
        }
    }

    // Imputation only ever touches NaN positions.
    #[test]
    fn impute_preserves_finite_entries(
        values in proptest::collection::vec(-100.0f64..100.0, 1..80),
        nan_idx in proptest::collection::vec(any::<prop::sample::Index>(), 0..12),
        window in 1usize..6,
    ) {
        let mut x = values.clone();
        for idx in &nan_idx {
            let i = idx.index(x.len());
            x[i] = f64::NAN;
        }
        if x.iter().all(|v| v.is_nan()) {
            return Ok(());
        }
        let out = impute_nan(&x, window).unwrap();
        prop_assert!(out.iter().all(|v| v.is_finite()));
        for (i, (&orig, &filled)) in x.iter().zip(&out).enumerate() {
            if !orig.is_nan() {
                prop_assert_eq!(orig, filled, "finite entry {} changed", i);
            }
        }
    }
}
