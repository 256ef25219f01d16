use crate::{PreprocessError, Result};
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

/// Fourier resampling: transform, zero-pad or truncate the spectrum to
/// the new length M = round(N·fs_out/fs_in), and invert. The Nyquist
/// bin is split symmetrically on upsampling and folded on downsampling,
/// which keeps the output real for real input.
pub fn fourier_resample(x: &[f64], fs_in: f64, fs_out: f64) -> Result<Vec<f64>> {
    let n = x.len();
    if n < 2 {
        return Err(PreprocessError::TooShort(n));
    }
    if !(fs_in > 0.0 && fs_out > 0.0) {
        return Err(PreprocessError::BadRate);
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(PreprocessError::NonFinite("fourier_resample"));
    }
    let m = (n as f64 * fs_out / fs_in).round() as usize;
    if m == 0 {
        return Err(PreprocessError::BadRate);
    }
    if m == n {
        return Ok(x.to_vec());
    }

    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(n);
    let mut spectrum: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft.process(&mut spectrum);

    let n_min = n.min(m);
    let mut resized = vec![Complex64::new(0.0, 0.0); m];
    // DC plus strictly-positive bins below the Nyquist of the shorter length.
    let pos = n_min.div_ceil(2);
    resized[..pos].copy_from_slice(&spectrum[..pos]);
    // Mirror-side bins above the (negative) Nyquist.
    for j in 1..=(n_min - 1) / 2 {
        resized[m - j] = spectrum[n - j];
    }
    if n_min % 2 == 0 {
        let h = n_min / 2;
        if m > n {
            resized[h] = 0.5 * spectrum[h];
            resized[m - h] = 0.5 * spectrum[h];
        } else {
            resized[h] = spectrum[h] + spectrum[n - h];
        }
    }

    let ifft = planner.plan_fft_inverse(m);
    ifft.process(&mut resized);
    // Unnormalized inverse: divide by N to land at M/N overall rescale.
    Ok(resized.iter().map(|c| c.re / n as f64).collect())
}
