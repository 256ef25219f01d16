//! Parameter-owning layer modules. Construction registers parameters
//! into a [`ParamStore`] under hierarchical names; `forward` replays
//! the layer onto a graph.

use crate::graph::{Graph, Tensor};
use crate::params::{ParamId, ParamStore};
use crate::rng::he_uniform;
use crate::Result;
use rand::Rng;

/// Group count rule used across the model: 32 when it divides the
/// channel count, else channels/4.
pub fn group_count(channels: usize) -> usize {
    if channels % 32 == 0 {
        32
    } else if channels % 4 == 0 {
        channels / 4
    } else {
        1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Init {
    /// Centered uniform scaled by fan-in.
    HeUniform,
    /// All zeros (posterior heads start at the prior).
    Zero,
}

#[derive(Debug, Clone)]
pub struct Conv1d {
    pub weight: ParamId,
    pub bias: ParamId,
    pub stride: usize,
}

impl Conv1d {
    #[allow(clippy::too_many_arguments)]
    pub fn new<R: Rng>(
        store: &mut ParamStore,
        name: &str,
        in_ch: usize,
        out_ch: usize,
        kernel: usize,
        stride: usize,
        init: Init,
        rng: &mut R,
    ) -> Conv1d {
        let fan_in = in_ch * kernel;
        let len = out_ch * in_ch * kernel;
        let w = match init {
            Init::HeUniform => he_uniform(rng, fan_in, len),
            Init::Zero => vec![0.0; len],
        };
        let weight = store.add(&format!("{name}.weight"), vec![out_ch, in_ch, kernel], w);
        let bias = store.add(&format!("{name}.bias"), vec![out_ch], vec![0.0; out_ch]);
        Conv1d { weight, bias, stride }
    }

    pub fn forward(&self, g: &mut Graph, store: &ParamStore, x: Tensor) -> Result<Tensor> {
        let w = g.param(store, self.weight);
        let b = g.param(store, self.bias);
        g.conv1d(x, w, b, self.stride)
    }
}

#[derive(Debug, Clone)]
pub struct GroupNorm {
    pub gamma: ParamId,
    pub beta: ParamId,
    pub groups: usize,
    pub eps: f64,
}

impl GroupNorm {
    pub fn new(store: &mut ParamStore, name: &str, channels: usize) -> GroupNorm {
        GroupNorm {
            gamma: store.add(&format!("{name}.gamma"), vec![channels], vec![1.0; channels]),
            beta: store.add(&format!("{name}.beta"), vec![channels], vec![0.0; channels]),
            groups: group_count(channels),
            eps: 1e-5,
        }
    }

    pub fn forward(&self, g: &mut Graph, store: &ParamStore, x: Tensor) -> Result<Tensor> {
        let gamma = g.param(store, self.gamma);
        let beta = g.param(store, self.beta);
        g.group_norm(x, gamma, beta, self.groups, self.eps)
    }
}

#[derive(Debug, Clone)]
pub struct Linear {
    pub weight: ParamId,
    pub bias: ParamId,
}

impl Linear {
    pub fn new<R: Rng>(
        store: &mut ParamStore,
        name: &str,
        in_dim: usize,
        out_dim: usize,
        init: Init,
        rng: &mut R,
    ) -> Linear {
        let w = match init {
            Init::HeUniform => he_uniform(rng, in_dim, in_dim * out_dim),
            Init::Zero => vec![0.0; in_dim * out_dim],
        };
        Linear {
            weight: store.add(&format!("{name}.weight"), vec![in_dim, out_dim], w),
            bias: store.add(&format!("{name}.bias"), vec![out_dim], vec![0.0; out_dim]),
        }
    }

    pub fn forward(&self, g: &mut Graph, store: &ParamStore, x: Tensor) -> Result<Tensor> {
        let w = g.param(store, self.weight);
        let b = g.param(store, self.bias);
        g.linear(x, w, b)
    }
}

/// Multi-head self-attention over the time axis. No positional encoding
/// and no residual — enclosing blocks add the skip.
#[derive(Debug, Clone)]
pub struct Mhsa {
    pub wq: Conv1d,
    pub wk: Conv1d,
    pub wv: Conv1d,
    pub wo: Conv1d,
    pub heads: usize,
    pub channels: usize,
}

impl Mhsa {
    pub fn new<R: Rng>(
        store: &mut ParamStore,
        name: &str,
        channels: usize,
        heads: usize,
        rng: &mut R,
    ) -> Mhsa {
        assert!(heads > 0 && channels % heads == 0, "channels {channels} not divisible by heads {heads}");
        let conv = |store: &mut ParamStore, n: &str, rng: &mut R| {
            Conv1d::new(store, &format!("{name}.{n}"), channels, channels, 1, 1, Init::HeUniform, rng)
        };
        Mhsa {
            wq: conv(store, "wq", rng),
            wk: conv(store, "wk", rng),
            wv: conv(store, "wv", rng),
            wo: conv(store, "wo", rng),
            heads,
            channels,
        }
    }

    pub fn forward(&self, g: &mut Graph, store: &ParamStore, x: Tensor) -> Result<Tensor> {
        let &[b, c, t] = g.shape(x) else {
            return Err(crate::NnError::ShapeMismatch {
                op: "mhsa",
                detail: format!("expected rank-3 input, got {:?}", g.shape(x)),
            });
        };
        let h = self.heads;
        let dh = c / h;

        let q = self.wq.forward(g, store, x)?;
        let k = self.wk.forward(g, store, x)?;
        let v = self.wv.forward(g, store, x)?;

        // [B, C, T] → [B·H, Dh, T]; the channel axis splits in place.
        let qh = g.reshape(q, vec![b * h, dh, t])?;
        let kh = g.reshape(k, vec![b * h, dh, t])?;
        let vh = g.reshape(v, vec![b * h, dh, t])?;

        // scores[i, j] = ⟨q_i, k_j⟩ / √Dh over the time axis.
        let scores = g.bmm(qh, kh, true, false)?;
        let scaled = g.scale(scores, 1.0 / (dh as f64).sqrt());
        let attn = g.softmax_last(scaled)?;
        // out[:, i] = Σ_j attn[i, j] · v[:, j]
        let ctx = g.bmm(vh, attn, false, true)?;
        let merged = g.reshape(ctx, vec![b, c, t])?;
        self.wo.forward(g, store, merged)
    }
}

/// Residual block: conv(k3) → GN → SiLU → conv(k3) → GN, plus a learned
/// 1×1 skip projection when the channel count changes.
#[derive(Debug, Clone)]
pub struct ResBlock {
    pub conv1: Conv1d,
    pub gn1: GroupNorm,
    pub conv2: Conv1d,
    pub gn2: GroupNorm,
    pub skip: Option<Conv1d>,
}

impl ResBlock {
    pub fn new<R: Rng>(
        store: &mut ParamStore,
        name: &str,
        in_ch: usize,
        out_ch: usize,
        rng: &mut R,
    ) -> ResBlock {
        ResBlock {
            conv1: Conv1d::new(store, &format!("{name}.conv1"), in_ch, out_ch, 3, 1, Init::HeUniform, rng),
            gn1: GroupNorm::new(store, &format!("{name}.gn1"), out_ch),
            conv2: Conv1d::new(store, &format!("{name}.conv2"), out_ch, out_ch, 3, 1, Init::HeUniform, rng),
            gn2: GroupNorm::new(store, &format!("{name}.gn2"), out_ch),
            skip: (in_ch != out_ch).then(|| {
                Conv1d::new(store, &format!("{name}.skip"), in_ch, out_ch, 1, 1, Init::HeUniform, rng)
            }),
        }
    }

    pub fn forward(&self, g: &mut Graph, store: &ParamStore, x: Tensor) -> Result<Tensor> {
        let h = self.conv1.forward(g, store, x)?;
        let h = self.gn1.forward(g, store, h)?;
        let h = g.silu(h);
        let h = self.conv2.forward(g, store, h)?;
        let h = self.gn2.forward(g, store, h)?;
        let s = match &self.skip {
            Some(conv) => conv.forward(g, store, x)?,
            None => x,
        };
        g.add(s, h)
    }
}

/// Nearest-neighbor ×2 upsampling followed by a k=3 convolution.
#[derive(Debug, Clone)]
pub struct Upsample {
    pub conv: Conv1d,
}

impl Upsample {
    pub fn new<R: Rng>(
        store: &mut ParamStore,
        name: &str,
        in_ch: usize,
        out_ch: usize,
        rng: &mut R,
    ) -> Upsample {
        Upsample {
            conv: Conv1d::new(store, &format!("{name}.conv"), in_ch, out_ch, 3, 1, Init::HeUniform, rng),
        }
    }

    pub fn forward(&self, g: &mut Graph, store: &ParamStore, x: Tensor) -> Result<Tensor> {
        let up = g.upsample_nearest2(x)?;
        self.conv.forward(g, store, up)
    }
}
