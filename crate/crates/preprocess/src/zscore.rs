use ecg_data::{LeadMatrix, NUM_LEADS};

/// Per-lead z-score: each row becomes (r − mean(r)) / sqrt(var(r) + eps),
/// with population variance. `eps` floors the divisor, so constant rows
/// map to zero instead of dividing by zero.
pub fn zscore_per_lead(signal: &LeadMatrix, eps: f64) -> LeadMatrix {
    let mut out = signal.clone();
    let t = signal.samples() as f64;
    for i in 0..NUM_LEADS {
        let row = out.row_by_index_mut(i);
        let mean = row.iter().sum::<f64>() / t;
        let var = row.iter().map(|&v| (v - mean) * (v - mean)).sum::<f64>() / t;
        let denom = (var + eps).sqrt();
        if denom == 0.0 {
            row.iter_mut().for_each(|v| *v = 0.0);
        } else {
            row.iter_mut().for_each(|v| *v = (*v - mean) / denom);
        }
    }
    out
}
