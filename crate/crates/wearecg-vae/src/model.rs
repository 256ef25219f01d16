use crate::{Result, VaeError};
use nn_core::{
    tensors_sha256, Conv1d, Graph, GroupNorm, Init, Mhsa, ParamStore, ResBlock, Tensor, Upsample,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

pub const LOGVAR_CLAMP: (f64, f64) = (-30.0, 20.0);

/// Architecture knobs. The paper-scale plan is three stride-2 stages
/// 128→256→512; smaller plans keep the same topology for desk-scale
/// runs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VaeDescriptor {
    pub in_channels: usize,
    pub latent_channels: usize,
    /// Channel count after each stride-2 stage; the stem outputs
    /// `stage_channels[0]`. Length = stage count; downsample factor is
    /// 2^len.
    pub stage_channels: Vec<usize>,
    pub heads: usize,
}

impl Default for VaeDescriptor {
    fn default() -> Self {
        VaeDescriptor::paper()
    }
}

impl VaeDescriptor {
    /// Full-size plan: stem 12→128, stages to 512, factor 8.
    pub fn paper() -> VaeDescriptor {
        VaeDescriptor {
            in_channels: 12,
            latent_channels: 4,
            stage_channels: vec![128, 256, 512],
            heads: 4,
        }
    }

    /// Slim plan with the same topology, sized for CPU experiments.
    pub fn desk(stage_channels: Vec<usize>) -> VaeDescriptor {
        VaeDescriptor {
            in_channels: 12,
            latent_channels: 4,
            stage_channels,
            heads: 4,
        }
    }

    pub fn downsample_factor(&self) -> usize {
        1 << self.stage_channels.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.stage_channels.is_empty() {
            return Err(VaeError::BadDescriptor("stage_channels must be nonempty".into()));
        }
        if self.in_channels == 0 || self.latent_channels == 0 || self.heads == 0 {
            return Err(VaeError::BadDescriptor("channel counts must be positive".into()));
        }
        for &c in &self.stage_channels {
            if c % 4 != 0 {
                return Err(VaeError::BadDescriptor(format!(
                    "stage channels must be divisible by 4 for group norm, got {c}"
                )));
            }
        }
        let last = *self.stage_channels.last().unwrap();
        if last % self.heads != 0 {
            return Err(VaeError::BadDescriptor(format!(
                "deepest channels {last} not divisible by heads {}",
                self.heads
            )));
        }
        Ok(())
    }
}

/// Pre-norm attention with residual: x + mhsa(gn(x)).
#[derive(Debug, Clone)]
struct AttnBlock {
    gn: GroupNorm,
    attn: Mhsa,
}

impl AttnBlock {
    fn new(store: &mut ParamStore, name: &str, channels: usize, heads: usize, rng: &mut ChaCha8Rng) -> AttnBlock {
        AttnBlock {
            gn: GroupNorm::new(store, &format!("{name}.gn"), channels),
            attn: Mhsa::new(store, &format!("{name}.attn"), channels, heads, rng),
        }
    }

    fn forward(&self, g: &mut Graph, store: &ParamStore, x: Tensor) -> Result<Tensor> {
        let h = self.gn.forward(g, store, x)?;
        let h = self.attn.forward(g, store, h)?;
        Ok(g.add(x, h)?)
    }
}

#[derive(Debug, Clone)]
struct Encoder {
    stem: Conv1d,
    stages: Vec<(ResBlock, Conv1d)>,
    deep_res: ResBlock,
    deep_attn: AttnBlock,
    mu_head: Conv1d,
    logvar_head: Conv1d,
}

#[derive(Debug, Clone)]
struct Decoder {
    stem: Conv1d,
    bottleneck: Vec<(ResBlock, AttnBlock)>,
    stages: Vec<(Upsample, ResBlock)>,
    out_head: Conv1d,
}

/// Encoder + decoder parameters plus the architecture descriptor.
pub struct VaeModel {
    pub descriptor: VaeDescriptor,
    pub store: ParamStore,
    encoder: Encoder,
    decoder: Decoder,
}

/// Per-timestep Gaussian posterior parameters, shape [B, d, T'].
#[derive(Debug, Clone, PartialEq)]
pub struct LatentGaussian {
    pub mu: Vec<f64>,
    pub logvar: Vec<f64>,
    pub batch: usize,
    pub dim: usize,
    pub t_prime: usize,
}

impl LatentGaussian {
    pub fn len(&self) -> usize {
        self.batch * self.dim * self.t_prime
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl VaeModel {
    /// Deterministic construction: same (descriptor, seed) → identical
    /// parameters, bit for bit.
    pub fn new(descriptor: VaeDescriptor, seed: u64) -> Result<VaeModel> {
        descriptor.validate()?;
        let mut store = ParamStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let chans = &descriptor.stage_channels;
        let n = chans.len();
        let deep = chans[n - 1];

        let stem = Conv1d::new(
            &mut store,
            "encoder.stem",
            descriptor.in_channels,
            chans[0],
            3,
            1,
            Init::HeUniform,
            &mut rng,
        );
        let mut stages = Vec::with_capacity(n);
        for i in 0..n {
            let c_in = chans[i];
            let c_out = chans[(i + 1).min(n - 1)];
            let res = ResBlock::new(&mut store, &format!("encoder.stage{i}.res"), c_in, c_in, &mut rng);
            let down = Conv1d::new(
                &mut store,
                &format!("encoder.stage{i}.down"),
                c_in,
                c_out,
                3,
                2,
                Init::HeUniform,
                &mut rng,
            );
            stages.push((res, down));
        }
        let deep_res = ResBlock::new(&mut store, "encoder.deep.res", deep, deep, &mut rng);
        let deep_attn = AttnBlock::new(&mut store, "encoder.deep.attn", deep, descriptor.heads, &mut rng);
        // Posterior heads start at zero, so training begins at the prior.
        let mu_head = Conv1d::new(&mut store, "encoder.mu_head", deep, descriptor.latent_channels, 3, 1, Init::Zero, &mut rng);
        let logvar_head = Conv1d::new(&mut store, "encoder.logvar_head", deep, descriptor.latent_channels, 3, 1, Init::Zero, &mut rng);
        let encoder = Encoder { stem, stages, deep_res, deep_attn, mu_head, logvar_head };

        let stem = Conv1d::new(&mut store, "decoder.stem", descriptor.latent_channels, deep, 3, 1, Init::HeUniform, &mut rng);
        let mut bottleneck = Vec::with_capacity(2);
        for i in 0..2 {
            let res = ResBlock::new(&mut store, &format!("decoder.bottleneck{i}.res"), deep, deep, &mut rng);
            let attn = AttnBlock::new(&mut store, &format!("decoder.bottleneck{i}.attn"), deep, descriptor.heads, &mut rng);
            bottleneck.push((res, attn));
        }
        let mut up_stages = Vec::with_capacity(n);
        for i in (0..n).rev() {
            let c_in = chans[(i + 1).min(n - 1)];
            let c_out = chans[i];
            let up = Upsample::new(&mut store, &format!("decoder.stage{i}.up"), c_in, c_out, &mut rng);
            let res = ResBlock::new(&mut store, &format!("decoder.stage{i}.res"), c_out, c_out, &mut rng);
            up_stages.push((up, res));
        }
        let out_head = Conv1d::new(&mut store, "decoder.out_head", chans[0], descriptor.in_channels, 3, 1, Init::HeUniform, &mut rng);
        let decoder = Decoder { stem, bottleneck, stages: up_stages, out_head };

        Ok(VaeModel { descriptor, store, encoder, decoder })
    }

    pub fn downsample_factor(&self) -> usize {
        self.descriptor.downsample_factor()
    }

    /// SHA-256 of the parameter blob; doubles as the model identity.
    pub fn sha256(&self) -> String {
        tensors_sha256(&self.store.export())
    }

    fn check_t(&self, t: usize) -> Result<()> {
        let factor = self.downsample_factor();
        if t == 0 || t % factor != 0 {
            return Err(VaeError::IndivisibleLength { t, factor });
        }
        Ok(())
    }

    /// Encoder forward on an existing graph. Input [B, 12, T] must have
    /// T divisible by the downsample factor. Returns (μ, log σ²), both
    /// [B, d, T/factor] with log σ² clamped.
    pub fn encode_graph(&self, g: &mut Graph, x: Tensor) -> Result<(Tensor, Tensor)> {
        let t = *g.shape(x).last().unwrap();
        self.check_t(t)?;
        let store = &self.store;
        let mut h = self.encoder.stem.forward(g, store, x)?;
        for (res, down) in &self.encoder.stages {
            h = res.forward(g, store, h)?;
            h = down.forward(g, store, h)?;
        }
        h = self.encoder.deep_res.forward(g, store, h)?;
        h = self.encoder.deep_attn.forward(g, store, h)?;
        let mu = self.encoder.mu_head.forward(g, store, h)?;
        let logvar_raw = self.encoder.logvar_head.forward(g, store, h)?;
        let logvar = g.clamp(logvar_raw, LOGVAR_CLAMP.0, LOGVAR_CLAMP.1);
        Ok((mu, logvar))
    }

    /// Decoder forward: [B, d, T'] → [B, 12, T'·factor].
    pub fn decode_graph(&self, g: &mut Graph, z: Tensor) -> Result<Tensor> {
        let store = &self.store;
        let mut h = self.decoder.stem.forward(g, store, z)?;
        for (res, attn) in &self.decoder.bottleneck {
            h = res.forward(g, store, h)?;
            h = attn.forward(g, store, h)?;
        }
        for (up, res) in &self.decoder.stages {
            h = up.forward(g, store, h)?;
            h = res.forward(g, store, h)?;
        }
        Ok(self.decoder.out_head.forward(g, store, h)?)
    }

    /// Inference-only encode of a flat [B, 12, T] buffer.
    pub fn encode(&self, x: &[f64], batch: usize, t: usize) -> Result<LatentGaussian> {
        self.check_t(t)?;
        let mut g = Graph::new();
        let xt = g.constant(vec![batch, self.descriptor.in_channels, t], x.to_vec());
        let (mu, logvar) = self.encode_graph(&mut g, xt)?;
        Ok(LatentGaussian {
            mu: g.value(mu).to_vec(),
            logvar: g.value(logvar).to_vec(),
            batch,
            dim: self.descriptor.latent_channels,
            t_prime: t / self.downsample_factor(),
        })
    }

    /// Inference-only decode of a flat [B, d, T'] latent.
    pub fn decode(&self, z: &[f64], batch: usize, t_prime: usize) -> Result<Vec<f64>> {
        let mut g = Graph::new();
        let zt = g.constant(vec![batch, self.descriptor.latent_channels, t_prime], z.to_vec());
        let out = self.decode_graph(&mut g, zt)?;
        Ok(g.value(out).to_vec())
    }
}

/// z = μ + exp(logvar/2) ⊙ ε with ε ~ N(0, I) from the seeded stream.
/// Gradient-free standalone version of the graph-side construction.
pub fn reparameterize(q: &LatentGaussian, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    q.mu
        .iter()
        .zip(&q.logvar)
        .map(|(&m, &lv)| {
            let eps: f64 = StandardNormal.sample(&mut rng);
            m + (lv / 2.0).exp() * eps
        })
        .collect()
}

/// Graph-side reparameterization: gradient flows to μ and logvar, not ε.
pub fn reparameterize_graph(
    g: &mut Graph,
    mu: Tensor,
    logvar: Tensor,
    eps: Tensor,
) -> Result<Tensor> {
    let half = g.scale(logvar, 0.5);
    let sigma = g.exp(half);
    let scaled = g.mul(sigma, eps)?;
    Ok(g.add(mu, scaled)?)
}

/// Draw a standard-normal tensor deterministically.
pub fn sample_eps(len: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| StandardNormal.sample(&mut rng)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> VaeModel {
        VaeModel::new(VaeDescriptor::desk(vec![8, 12, 16]), 42).unwrap()
    }

    #[test]
    fn latent_shape_follows_factor_eight() {
        let model = tiny();
        assert_eq!(model.downsample_factor(), 8);
        let x = vec![0.0; 12 * 1000];
        let q = model.encode(&x, 1, 1000).unwrap();
        assert_eq!((q.batch, q.dim, q.t_prime), (1, 4, 125));
        assert_eq!(q.mu.len(), 4 * 125);
    }

    #[test]
    fn zero_init_heads_start_at_the_prior() {
        let model = tiny();
        let x = vec![0.0; 12 * 64];
        let q = model.encode(&x, 1, 64).unwrap();
        assert!(q.mu.iter().all(|&v| v == 0.0));
        assert!(q.logvar.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn batch_items_are_independent() {
        let model = tiny();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let one: Vec<f64> = (0..12 * 32)
            .map(|_| rand::Rng::gen_range(&mut rng, -1.0..1.0))
            .collect();
        let two: Vec<f64> = one.iter().chain(one.iter()).copied().collect();
        let q = model.encode(&two, 2, 32).unwrap();
        let half = q.mu.len() / 2;
        assert_eq!(&q.mu[..half], &q.mu[half..]);
        assert_eq!(&q.logvar[..half], &q.logvar[half..]);
    }

    #[test]
    fn indivisible_length_is_rejected() {
        let model = tiny();
        let x = vec![0.0; 12 * 30];
        assert!(matches!(
            model.encode(&x, 1, 30),
            Err(VaeError::IndivisibleLength { t: 30, factor: 8 })
        ));
    }

    #[test]
    fn decode_mirrors_encode_shapes() {
        let model = tiny();
        for t in [8usize, 16, 64, 96] {
            let z = vec![0.1; 4 * (t / 8)];
            let out = model.decode(&z, 1, t / 8).unwrap();
            assert_eq!(out.len(), 12 * t);
        }
    }

    #[test]
    fn decode_is_finite_for_latents_in_range() {
        let model = tiny();
        for seed in 0..100u64 {
            let z: Vec<f64> = sample_eps(4 * 8, seed).iter().map(|v| 3.0 * v.tanh()).collect();
            let out = model.decode(&z, 1, 8 * 8 / 8).unwrap();
            assert!(out.iter().all(|v| v.is_finite()), "seed {seed}");
        }
    }

    #[test]
    fn reparameterize_moments_and_determinism() {
        let n = 100_000;
        let q = LatentGaussian {
            mu: vec![0.0; n],
            logvar: vec![0.0; n],
            batch: 1,
            dim: 1,
            t_prime: n,
        };
        let z = reparameterize(&q, 123);
        let mean = z.iter().sum::<f64>() / n as f64;
        let var = z.iter().map(|&v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.02, "sample mean {mean}");
        assert!((var - 1.0).abs() < 0.05, "sample variance {var}");

        assert_eq!(reparameterize(&q, 7), reparameterize(&q, 7));

        // Clamp floor ⇒ vanishing σ ⇒ z ≈ μ.
        let q = LatentGaussian {
            mu: vec![1.5; 10],
            logvar: vec![LOGVAR_CLAMP.0; 10],
            batch: 1,
            dim: 1,
            t_prime: 10,
        };
        for v in reparameterize(&q, 5) {
            assert!((v - 1.5).abs() < 1e-6);
        }
    }

    #[test]
    fn same_seed_builds_identical_models() {
        let a = VaeModel::new(VaeDescriptor::desk(vec![8, 12, 16]), 7).unwrap();
        let b = VaeModel::new(VaeDescriptor::desk(vec![8, 12, 16]), 7).unwrap();
        assert_eq!(a.sha256(), b.sha256());
        let c = VaeModel::new(VaeDescriptor::desk(vec![8, 12, 16]), 8).unwrap();
        assert_ne!(a.sha256(), c.sha256());
    }

    #[test]
    fn descriptor_validation() {
        assert!(VaeDescriptor::paper().validate().is_ok());
        assert!(VaeDescriptor::desk(vec![]).validate().is_err());
        assert!(VaeDescriptor::desk(vec![10]).validate().is_err());
        let mut d = VaeDescriptor::desk(vec![8, 16]);
        d.heads = 5;
        assert!(d.validate().is_err());
    }
}
