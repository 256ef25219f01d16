//! Raw numeric kernels. All parallelism is over disjoint output rows
//! with sequential inner accumulation, so results do not depend on the
//! thread count.

use rayon::prelude::*;

/// SAME-padding output length: ⌈T/stride⌉.
pub fn conv1d_out_len(t_in: usize, stride: usize) -> usize {
    t_in.div_ceil(stride)
}

/// Left padding for SAME semantics.
pub(crate) fn conv1d_pad_left(t_in: usize, k: usize, stride: usize) -> usize {
    let t_out = conv1d_out_len(t_in, stride);
    let span = (t_out - 1) * stride + k;
    let pad_total = span.saturating_sub(t_in);
    pad_total / 2
}

pub(crate) fn conv1d_forward(
    x: &[f64],
    batch: usize,
    c_in: usize,
    t_in: usize,
    w: &[f64],
    c_out: usize,
    k: usize,
    bias: &[f64],
    stride: usize,
) -> Vec<f64> {
    let t_out = conv1d_out_len(t_in, stride);
    let pad_left = conv1d_pad_left(t_in, k, stride);
    let mut out = vec![0.0; batch * c_out * t_out];
    out.par_chunks_mut(t_out).enumerate().for_each(|(idx, orow)| {
        let b = idx / c_out;
        let co = idx % c_out;
        orow.fill(bias[co]);
        for ci in 0..c_in {
            let xrow = &x[(b * c_in + ci) * t_in..(b * c_in + ci + 1) * t_in];
            let wrow = &w[(co * c_in + ci) * k..(co * c_in + ci + 1) * k];
            if stride == 1 {
                for (j, &coeff) in wrow.iter().enumerate() {
                    let shift = j as isize - pad_left as isize;
                    let lo = (-shift).max(0) as usize;
                    let hi = (t_in as isize - shift).clamp(0, t_out as isize) as usize;
                    if hi > lo {
                        let xs = &xrow[(lo as isize + shift) as usize..(hi as isize + shift) as usize];
                        for (o, xv) in orow[lo..hi].iter_mut().zip(xs) {
                            *o += coeff * xv;
                        }
                    }
                }
            } else {
                for (t, o) in orow.iter_mut().enumerate() {
                    let base = (t * stride) as isize - pad_left as isize;
                    let mut acc = 0.0;
                    for (j, &coeff) in wrow.iter().enumerate() {
                        let ti = base + j as isize;
                        if ti >= 0 && (ti as usize) < t_in {
                            acc += coeff * xrow[ti as usize];
                        }
                    }
                    *o += acc;
                }
            }
        }
    });
    out
}

pub(crate) fn conv1d_grad_bias(dy: &[f64], batch: usize, c_out: usize, t_out: usize) -> Vec<f64> {
    let mut db = vec![0.0; c_out];
    for b in 0..batch {
        for (co, acc) in db.iter_mut().enumerate() {
            let row = &dy[(b * c_out + co) * t_out..(b * c_out + co + 1) * t_out];
            *acc += row.iter().sum::<f64>();
        }
    }
    db
}

pub(crate) fn conv1d_grad_w(
    x: &[f64],
    dy: &[f64],
    batch: usize,
    c_in: usize,
    t_in: usize,
    c_out: usize,
    k: usize,
    stride: usize,
) -> Vec<f64> {
    let t_out = conv1d_out_len(t_in, stride);
    let pad_left = conv1d_pad_left(t_in, k, stride);
    let mut dw = vec![0.0; c_out * c_in * k];
    dw.par_chunks_mut(k).enumerate().for_each(|(idx, dwrow)| {
        let co = idx / c_in;
        let ci = idx % c_in;
        for b in 0..batch {
            let xrow = &x[(b * c_in + ci) * t_in..(b * c_in + ci + 1) * t_in];
            let dyrow = &dy[(b * c_out + co) * t_out..(b * c_out + co + 1) * t_out];
            for (j, acc) in dwrow.iter_mut().enumerate() {
                let shift = j as isize - pad_left as isize;
                if stride == 1 {
                    let lo = (-shift).max(0) as usize;
                    let hi = (t_in as isize - shift).clamp(0, t_out as isize) as usize;
                    if hi > lo {
                        let xs = &xrow[(lo as isize + shift) as usize..(hi as isize + shift) as usize];
                        let mut s = 0.0;
                        for (dyv, xv) in dyrow[lo..hi].iter().zip(xs) {
                            s += dyv * xv;
                        }
                        *acc += s;
                    }
                } else {
                    let mut s = 0.0;
                    for (t, dyv) in dyrow.iter().enumerate() {
                        let ti = (t * stride) as isize + shift;
                        if ti >= 0 && (ti as usize) < t_in {
                            s += dyv * xrow[ti as usize];
                        }
                    }
                    *acc += s;
                }
            }
        }
    });
    dw
}

pub(crate) fn conv1d_grad_x(
    dy: &[f64],
    w: &[f64],
    batch: usize,
    c_in: usize,
    t_in: usize,
    c_out: usize,
    k: usize,
    stride: usize,
) -> Vec<f64> {
    let t_out = conv1d_out_len(t_in, stride);
    let pad_left = conv1d_pad_left(t_in, k, stride);
    let mut dx = vec![0.0; batch * c_in * t_in];
    dx.par_chunks_mut(t_in).enumerate().for_each(|(idx, dxrow)| {
        let b = idx / c_in;
        let ci = idx % c_in;
        for co in 0..c_out {
            let dyrow = &dy[(b * c_out + co) * t_out..(b * c_out + co + 1) * t_out];
            let wrow = &w[(co * c_in + ci) * k..(co * c_in + ci + 1) * k];
            if stride == 1 {
                // dx[t] += w[j] · dy[t − j + pad_left]
                for (j, &coeff) in wrow.iter().enumerate() {
                    let shift = pad_left as isize - j as isize;
                    let lo = (-shift).max(0) as usize;
                    let hi = (t_out as isize - shift).clamp(0, t_in as isize) as usize;
                    if hi > lo {
                        let dys = &dyrow[(lo as isize + shift) as usize..(hi as isize + shift) as usize];
                        for (o, dyv) in dxrow[lo..hi].iter_mut().zip(dys) {
                            *o += coeff * dyv;
                        }
                    }
                }
            } else {
                for (t, o) in dxrow.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    for (j, &coeff) in wrow.iter().enumerate() {
                        let num = t as isize + pad_left as isize - j as isize;
                        if num >= 0 && num % stride as isize == 0 {
                            let tau = (num / stride as isize) as usize;
                            if tau < t_out {
                                acc += coeff * dyrow[tau];
                            }
                        }
                    }
                    *o += acc;
                }
            }
        }
    });
    dx
}

/// Per-(batch, group) mean and inverse standard deviation.
pub(crate) fn group_stats(
    x: &[f64],
    batch: usize,
    channels: usize,
    t: usize,
    groups: usize,
    eps: f64,
) -> Vec<(f64, f64)> {
    let cg = channels / groups;
    let span = cg * t;
    (0..batch * groups)
        .map(|idx| {
            let slice = &x[idx * span..(idx + 1) * span];
            let mean = slice.iter().sum::<f64>() / span as f64;
            let var = slice.iter().map(|&v| (v - mean) * (v - mean)).sum::<f64>() / span as f64;
            (mean, 1.0 / (var + eps).sqrt())
        })
        .collect()
}

pub(crate) fn group_norm_forward(
    x: &[f64],
    batch: usize,
    channels: usize,
    t: usize,
    groups: usize,
    eps: f64,
    gamma: &[f64],
    beta: &[f64],
) -> Vec<f64> {
    let cg = channels / groups;
    let span = cg * t;
    let stats = group_stats(x, batch, channels, t, groups, eps);
    let mut out = vec![0.0; x.len()];
    out.par_chunks_mut(span).enumerate().for_each(|(idx, orow)| {
        let g = idx % groups;
        let (mean, inv_std) = stats[idx];
        let xs = &x[idx * span..(idx + 1) * span];
        for c_off in 0..cg {
            let c = g * cg + c_off;
            let (ga, be) = (gamma[c], beta[c]);
            for (o, xv) in orow[c_off * t..(c_off + 1) * t]
                .iter_mut()
                .zip(&xs[c_off * t..(c_off + 1) * t])
            {
                *o = (xv - mean) * inv_std * ga + be;
            }
        }
    });
    out
}

/// Returns (dx, dgamma, dbeta).
pub(crate) fn group_norm_backward(
    x: &[f64],
    dy: &[f64],
    batch: usize,
    channels: usize,
    t: usize,
    groups: usize,
    eps: f64,
    gamma: &[f64],
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let cg = channels / groups;
    let span = cg * t;
    let n = span as f64;
    let stats = group_stats(x, batch, channels, t, groups, eps);

    let mut dx = vec![0.0; x.len()];
    dx.par_chunks_mut(span).enumerate().for_each(|(idx, dxrow)| {
        let g = idx % groups;
        let (mean, inv_std) = stats[idx];
        let xs = &x[idx * span..(idx + 1) * span];
        let dys = &dy[idx * span..(idx + 1) * span];
        // dxhat = dy·gamma; two reductions then the standard normalization rule.
        let mut sum1 = 0.0;
        let mut sum2 = 0.0;
        for c_off in 0..cg {
            let ga = gamma[g * cg + c_off];
            for (xv, dyv) in xs[c_off * t..(c_off + 1) * t]
                .iter()
                .zip(&dys[c_off * t..(c_off + 1) * t])
            {
                let dxhat = dyv * ga;
                sum1 += dxhat;
                sum2 += dxhat * (xv - mean) * inv_std;
            }
        }
        for c_off in 0..cg {
            let ga = gamma[g * cg + c_off];
            for ((o, xv), dyv) in dxrow[c_off * t..(c_off + 1) * t]
                .iter_mut()
                .zip(&xs[c_off * t..(c_off + 1) * t])
                .zip(&dys[c_off * t..(c_off + 1) * t])
            {
                let xhat = (xv - mean) * inv_std;
                let dxhat = dyv * ga;
                *o = inv_std * (dxhat - (sum1 + xhat * sum2) / n);
            }
        }
    });

    let mut dgamma = vec![0.0; channels];
    let mut dbeta = vec![0.0; channels];
    for b in 0..batch {
        for c in 0..channels {
            let g = c / cg;
            let (mean, inv_std) = stats[b * groups + g];
            let base = (b * channels + c) * t;
            let mut dg = 0.0;
            let mut db = 0.0;
            for (xv, dyv) in x[base..base + t].iter().zip(&dy[base..base + t]) {
                dg += dyv * (xv - mean) * inv_std;
                db += dyv;
            }
            dgamma[c] += dg;
            dbeta[c] += db;
        }
    }
    (dx, dgamma, dbeta)
}

/// C[m,n] += A[m,k]·B[k,n], all row-major and contiguous.
fn matmul_acc(a: &[f64], b: &[f64], m: usize, k_dim: usize, n: usize, out: &mut [f64]) {
    for i in 0..m {
        let arow = &a[i * k_dim..(i + 1) * k_dim];
        let orow = &mut out[i * n..(i + 1) * n];
        for (kk, &av) in arow.iter().enumerate() {
            if av == 0.0 {
                continue;
            }
            let brow = &b[kk * n..(kk + 1) * n];
            for (o, bv) in orow.iter_mut().zip(brow) {
                *o += av * bv;
            }
        }
    }
}

fn transpose(a: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut out = vec![0.0; a.len()];
    for r in 0..rows {
        for c in 0..cols {
            out[c * rows + r] = a[r * cols + c];
        }
    }
    out
}

/// Batched matmul over [N, ·, ·] with per-side transpose flags.
/// Effective A is [m, k] and effective B is [k, n] per batch.
#[allow(clippy::too_many_arguments)]
pub(crate) fn bmm_forward(
    a: &[f64],
    b: &[f64],
    batches: usize,
    m: usize,
    k_dim: usize,
    n: usize,
    ta: bool,
    tb: bool,
) -> Vec<f64> {
    let a_span = m * k_dim;
    let b_span = k_dim * n;
    let mut out = vec![0.0; batches * m * n];
    out.par_chunks_mut(m * n).enumerate().for_each(|(i, orow)| {
        let a_slice = &a[i * a_span..(i + 1) * a_span];
        let b_slice = &b[i * b_span..(i + 1) * b_span];
        let a_eff = if ta {
            transpose(a_slice, k_dim, m)
        } else {
            a_slice.to_vec()
        };
        let b_eff = if tb {
            transpose(b_slice, n, k_dim)
        } else {
            b_slice.to_vec()
        };
        matmul_acc(&a_eff, &b_eff, m, k_dim, n, orow);
    });
    out
}

/// Gradients of bmm w.r.t. both inputs: dA_eff = dC·B_effᵀ, dB_eff = A_effᵀ·dC,
/// un-transposed back into the stored layouts.
#[allow(clippy::too_many_arguments)]
pub(crate) fn bmm_backward(
    a: &[f64],
    b: &[f64],
    dy: &[f64],
    _batches: usize,
    m: usize,
    k_dim: usize,
    n: usize,
    ta: bool,
    tb: bool,
) -> (Vec<f64>, Vec<f64>) {
    let a_span = m * k_dim;
    let b_span = k_dim * n;
    let mut da = vec![0.0; a.len()];
    let mut db = vec![0.0; b.len()];
    da.par_chunks_mut(a_span)
        .zip(db.par_chunks_mut(b_span))
        .enumerate()
        .for_each(|(i, (darow, dbrow))| {
            let a_slice = &a[i * a_span..(i + 1) * a_span];
            let b_slice = &b[i * b_span..(i + 1) * b_span];
            let dyrow = &dy[i * m * n..(i + 1) * m * n];
            let a_eff = if ta {
                transpose(a_slice, k_dim, m)
            } else {
                a_slice.to_vec()
            };
            let b_eff = if tb {
                transpose(b_slice, n, k_dim)
            } else {
                b_slice.to_vec()
            };

            // dA_eff[m,k] = dC[m,n] · B_eff[k,n]ᵀ
            let b_eff_t = transpose(&b_eff, k_dim, n);
            let mut da_eff = vec![0.0; m * k_dim];
            matmul_acc(dyrow, &b_eff_t, m, n, k_dim, &mut da_eff);
            // dB_eff[k,n] = A_eff[m,k]ᵀ · dC[m,n]
            let a_eff_t = transpose(&a_eff, m, k_dim);
            let mut db_eff = vec![0.0; k_dim * n];
            matmul_acc(&a_eff_t, dyrow, k_dim, m, n, &mut db_eff);

            if ta {
                darow.copy_from_slice(&transpose(&da_eff, m, k_dim));
            } else {
                darow.copy_from_slice(&da_eff);
            }
            if tb {
                dbrow.copy_from_slice(&transpose(&db_eff, k_dim, n));
            } else {
                dbrow.copy_from_slice(&db_eff);
            }
        });
    (da, db)
}

pub(crate) fn softmax_last_forward(x: &[f64], row_len: usize) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    out.par_chunks_mut(row_len)
        .zip(x.par_chunks(row_len))
        .for_each(|(orow, xrow)| {
            let max = xrow.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut sum = 0.0;
            for (o, &xv) in orow.iter_mut().zip(xrow) {
                let e = (xv - max).exp();
                *o = e;
                sum += e;
            }
            let inv = 1.0 / sum;
            orow.iter_mut().for_each(|o| *o *= inv);
        });
    out
}

pub(crate) fn softmax_last_backward(y: &[f64], dy: &[f64], row_len: usize) -> Vec<f64> {
    let mut dx = vec![0.0; y.len()];
    dx.par_chunks_mut(row_len)
        .enumerate()
        .for_each(|(i, dxrow)| {
            let yrow = &y[i * row_len..(i + 1) * row_len];
            let dyrow = &dy[i * row_len..(i + 1) * row_len];
            let dot: f64 = yrow.iter().zip(dyrow).map(|(a, b)| a * b).sum();
            for ((o, &yv), &dyv) in dxrow.iter_mut().zip(yrow).zip(dyrow) {
                *o = yv * (dyv - dot);
            }
        });
    dx
}
