use crate::{PreprocessError, Result};

/// Replace each NaN with the mean of the non-NaN values inside the
/// window `[i−w, i+w]` of the ORIGINAL series (fills never cascade).
/// A window with no finite values falls back to the series mean;
/// an all-NaN series is an error.
pub fn impute_nan(x: &[f64], window: usize) -> Result<Vec<f64>> {
    let n = x.len();
    let mut finite_sum = 0.0;
    let mut finite_count = 0usize;
    for &v in x {
        if !v.is_nan() {
            finite_sum += v;
            finite_count += 1;
        }
    }
    if finite_count == 0 {
        return Err(PreprocessError::AllNan);
    }
    let global_mean = finite_sum / finite_count as f64;

    let mut out = x.to_vec();
    for i in 0..n {
        if !x[i].is_nan() {
            continue;
        }
        let lo = i.saturating_sub(window);
        let hi = (i + window).min(n - 1);
        let mut sum = 0.0;
        let mut count = 0usize;
        for &v in &x[lo..=hi] {
            if !v.is_nan() {
                sum += v;
                count += 1;
            }
        }
        out[i] = if count > 0 { sum / count as f64 } else { global_mean };
    }
    Ok(out)
}
