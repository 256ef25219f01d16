use crate::{Result, SynthError};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

pub const WAVE_NAMES: [&str; 5] = ["P", "Q", "R", "S", "T"];

/// One Gaussian bump on the beat phase circle, with an amplitude per
/// spatial axis (x = leftward, y = inferior, z = anterior).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveParams {
    pub amplitude: [f64; 3],
    /// Phase center in radians on the cycle circle.
    pub center: f64,
    /// Gaussian width in radians.
    pub width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DipoleParams {
    /// P, Q, R, S, T in order.
    pub waves: [WaveParams; 5],
    pub heart_rate_bpm: f64,
    /// Relative standard deviation of RR intervals (log-normal).
    pub rr_jitter: f64,
    /// Rotation applied to every dipole sample.
    pub axis_rotation: [[f64; 3]; 3],
    /// Additive white noise per lead, in mV (applied by the dataset
    /// generator after projection, not by `gen_dipole`).
    pub noise_std: f64,
    /// Relative amplitude jitter drawn per record, per wave, per axis
    /// by the dataset generator.
    pub amp_jitter: f64,
}

pub(crate) const IDENTITY_ROTATION: [[f64; 3]; 3] =
    [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

impl Default for DipoleParams {
    fn default() -> Self {
        DipoleParams {
            waves: [
                // P
                WaveParams { amplitude: [0.06, 0.10, 0.03], center: -1.047, width: 0.25 },
                // Q
                WaveParams { amplitude: [-0.06, -0.10, -0.05], center: -0.262, width: 0.10 },
                // R
                WaveParams { amplitude: [0.60, 1.00, -0.50], center: 0.0, width: 0.10 },
                // S
                WaveParams { amplitude: [-0.25, -0.35, 0.45], center: 0.262, width: 0.10 },
                // T
                WaveParams { amplitude: [0.25, 0.35, 0.20], center: 1.60, width: 0.45 },
            ],
            heart_rate_bpm: 72.0,
            rr_jitter: 0.05,
            axis_rotation: IDENTITY_ROTATION,
            noise_std: 0.02,
            amp_jitter: 0.15,
        }
    }
}

impl DipoleParams {
    pub fn validate(&self) -> Result<()> {
        for w in &self.waves {
            if !(w.width > 0.0) {
                return Err(SynthError::BadParams(format!("wave width must be > 0, got {}", w.width)));
            }
        }
        if !(20.0..=250.0).contains(&self.heart_rate_bpm) {
            return Err(SynthError::BadParams(format!(
                "heart rate {} outside [20, 250] bpm",
                self.heart_rate_bpm
            )));
        }
        if self.rr_jitter < 0.0 || self.noise_std < 0.0 || self.amp_jitter < 0.0 {
            return Err(SynthError::BadParams("jitter and noise must be nonnegative".into()));
        }
        // Rotation must be orthonormal within 1e-6.
        let r = &self.axis_rotation;
        for i in 0..3 {
            for j in 0..3 {
                let dot: f64 = (0..3).map(|k| r[k][i] * r[k][j]).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                if (dot - expect).abs() > 1e-6 {
                    return Err(SynthError::BadParams("axis_rotation is not orthonormal".into()));
                }
            }
        }
        Ok(())
    }
}

/// Rotation by `angle` radians about the z (anterior) axis.
pub fn rotation_z(angle: f64) -> [[f64; 3]; 3] {
    let (s, c) = angle.sin_cos();
    [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]]
}

pub(crate) fn mat_mul(a: &[[f64; 3]; 3], b: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

/// A generated dipole path plus the beat phase at every sample.
#[derive(Debug, Clone)]
pub struct DipoleTrajectory {
    /// One (x, y, z) point per sample.
    pub points: Vec<[f64; 3]>,
    /// Wrapped beat phase in [0, 2π) per sample.
    pub phases: Vec<f64>,
}

fn wrap_distance(theta: f64, center: f64) -> f64 {
    let mut d = theta - center;
    while d > std::f64::consts::PI {
        d -= 2.0 * std::f64::consts::PI;
    }
    while d < -std::f64::consts::PI {
        d += 2.0 * std::f64::consts::PI;
    }
    d
}

/// Sum-of-Gaussians dipole at phase θ.
pub(crate) fn dipole_at(params: &DipoleParams, theta: f64) -> [f64; 3] {
    let mut d = [0.0; 3];
    for w in &params.waves {
        let dd = wrap_distance(theta, w.center);
        let g = (-dd * dd / (2.0 * w.width * w.width)).exp();
        for (axis, amp) in d.iter_mut().zip(&w.amplitude) {
            *axis += amp * g;
        }
    }
    let r = &params.axis_rotation;
    let mut out = [0.0; 3];
    for i in 0..3 {
        out[i] = r[i][0] * d[0] + r[i][1] * d[1] + r[i][2] * d[2];
    }
    out
}

/// Generate the dipole trajectory. Phase advances by 2π per RR
/// interval; each beat's RR is drawn from a log-normal whose relative
/// std is `rr_jitter` (zero jitter gives exactly the mean interval).
pub fn gen_dipole(params: &DipoleParams, duration_s: f64, fs: u32, seed: u64) -> Result<DipoleTrajectory> {
    params.validate()?;
    if !(duration_s > 0.0) {
        return Err(SynthError::BadParams(format!("duration must be > 0, got {duration_s}")));
    }
    if fs == 0 {
        return Err(SynthError::BadParams("sampling rate must be > 0".into()));
    }
    let n = (duration_s * fs as f64).round() as usize;
    let dt = 1.0 / fs as f64;
    let rr_mean = 60.0 / params.heart_rate_bpm;

    let mut rr_rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw_rr = move || -> f64 {
        if params.rr_jitter == 0.0 {
            rr_mean
        } else {
            // Log-normal with mean rr_mean and relative std rr_jitter.
            let sigma = (1.0 + params.rr_jitter * params.rr_jitter).ln().sqrt();
            let mu = rr_mean.ln() - sigma * sigma / 2.0;
            let normal = Normal::new(mu, sigma).expect("valid log-normal");
            normal.sample(&mut rr_rng).exp()
        }
    };

    let mut points = Vec::with_capacity(n);
    let mut phases = Vec::with_capacity(n);
    // Start mid-diastole so the first full PQRST lands inside the window.
    let mut theta = 2.0;
    let mut rr = draw_rr();
    for _ in 0..n {
        points.push(dipole_at(params, theta));
        phases.push(theta);
        theta += 2.0 * std::f64::consts::PI * dt / rr;
        if theta >= 2.0 * std::f64::consts::PI {
            theta -= 2.0 * std::f64::consts::PI;
            rr = draw_rr();
        }
    }
    Ok(DipoleTrajectory { points, phases })
}
