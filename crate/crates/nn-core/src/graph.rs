use crate::kernels;
use crate::params::{ParamId, ParamStore};
use crate::{NnError, Result};

/// Handle to a tensor on a [`Graph`] tape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Tensor {
    pub(crate) id: usize,
}

#[derive(Debug, Clone)]
enum Op {
    Constant,
    Leaf { param: Option<ParamId> },
    Add,
    Sub,
    Mul,
    Scale(f64),
    AddScalar,
    Exp,
    Silu,
    Sigmoid,
    Clamp(f64, f64),
    Conv1d { stride: usize },
    GroupNorm { groups: usize, eps: f64 },
    Bmm { ta: bool, tb: bool },
    SoftmaxLast,
    Reshape,
    UpsampleNearest2,
    MeanLast,
    Linear,
    SumAll,
    BceWithLogits,
}

struct Node {
    op: Op,
    inputs: Vec<usize>,
    shape: Vec<usize>,
    data: Vec<f64>,
    requires_grad: bool,
}

/// A strict-evaluation tape: every operation runs immediately and
/// records enough to replay gradients in reverse.
#[derive(Default)]
pub struct Graph {
    nodes: Vec<Node>,
    grads: Vec<Option<Vec<f64>>>,
}

fn numel(shape: &[usize]) -> usize {
    shape.iter().product()
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl Graph {
    pub fn new() -> Graph {
        Graph::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, op: Op, inputs: Vec<usize>, shape: Vec<usize>, data: Vec<f64>) -> Tensor {
        debug_assert_eq!(numel(&shape), data.len());
        let requires_grad = match op {
            Op::Constant => false,
            Op::Leaf { .. } => true,
            _ => inputs.iter().any(|&i| self.nodes[i].requires_grad),
        };
        self.nodes.push(Node {
            op,
            inputs,
            shape,
            data,
            requires_grad,
        });
        Tensor {
            id: self.nodes.len() - 1,
        }
    }

    // ── Leaves ──────────────────────────────────────────────────────

    /// Untracked constant input.
    pub fn constant(&mut self, shape: Vec<usize>, data: Vec<f64>) -> Tensor {
        self.push(Op::Constant, vec![], shape, data)
    }

    pub fn scalar_constant(&mut self, v: f64) -> Tensor {
        self.constant(vec![], vec![v])
    }

    /// Tracked leaf not tied to a parameter store (for tests and inputs
    /// whose gradient is inspected directly).
    pub fn leaf(&mut self, shape: Vec<usize>, data: Vec<f64>) -> Tensor {
        self.push(Op::Leaf { param: None }, vec![], shape, data)
    }

    /// Leaf bound to a stored parameter. Gradient flows back into the
    /// store on [`Graph::backward`] unless the parameter is frozen, in
    /// which case the leaf behaves as a constant.
    pub fn param(&mut self, store: &ParamStore, id: ParamId) -> Tensor {
        let shape = store.shape(id).to_vec();
        let data = store.data(id).to_vec();
        if store.is_frozen(id) {
            self.push(Op::Constant, vec![], shape, data)
        } else {
            self.push(Op::Leaf { param: Some(id) }, vec![], shape, data)
        }
    }

    // ── Accessors ───────────────────────────────────────────────────

    pub fn value(&self, t: Tensor) -> &[f64] {
        &self.nodes[t.id].data
    }

    pub fn shape(&self, t: Tensor) -> &[usize] {
        &self.nodes[t.id].shape
    }

    pub fn scalar(&self, t: Tensor) -> f64 {
        debug_assert_eq!(numel(&self.nodes[t.id].shape), 1);
        self.nodes[t.id].data[0]
    }

    /// Gradient of the most recent backward pass w.r.t. `t`, if any.
    pub fn grad(&self, t: Tensor) -> Option<&[f64]> {
        self.grads.get(t.id).and_then(|g| g.as_deref())
    }

    fn same_shape(&self, op: &'static str, a: Tensor, b: Tensor) -> Result<Vec<usize>> {
        let (sa, sb) = (&self.nodes[a.id].shape, &self.nodes[b.id].shape);
        if sa != sb {
            return Err(NnError::ShapeMismatch {
                op,
                detail: format!("{sa:?} vs {sb:?}"),
            });
        }
        Ok(sa.clone())
    }

    fn shape3(&self, op: &'static str, t: Tensor) -> Result<(usize, usize, usize)> {
        match self.nodes[t.id].shape[..] {
            [b, c, tt] => Ok((b, c, tt)),
            ref s => Err(NnError::ShapeMismatch {
                op,
                detail: format!("expected rank-3 tensor, got {s:?}"),
            }),
        }
    }

    // ── Elementwise ─────────────────────────────────────────────────

    pub fn add(&mut self, a: Tensor, b: Tensor) -> Result<Tensor> {
        let shape = self.same_shape("add", a, b)?;
        let data = self.nodes[a.id]
            .data
            .iter()
            .zip(&self.nodes[b.id].data)
            .map(|(x, y)| x + y)
            .collect();
        Ok(self.push(Op::Add, vec![a.id, b.id], shape, data))
    }

    pub fn sub(&mut self, a: Tensor, b: Tensor) -> Result<Tensor> {
        let shape = self.same_shape("sub", a, b)?;
        let data = self.nodes[a.id]
            .data
            .iter()
            .zip(&self.nodes[b.id].data)
            .map(|(x, y)| x - y)
            .collect();
        Ok(self.push(Op::Sub, vec![a.id, b.id], shape, data))
    }

    pub fn mul(&mut self, a: Tensor, b: Tensor) -> Result<Tensor> {
        let shape = self.same_shape("mul", a, b)?;
        let data = self.nodes[a.id]
            .data
            .iter()
            .zip(&self.nodes[b.id].data)
            .map(|(x, y)| x * y)
            .collect();
        Ok(self.push(Op::Mul, vec![a.id, b.id], shape, data))
    }

    pub fn scale(&mut self, a: Tensor, c: f64) -> Tensor {
        let shape = self.nodes[a.id].shape.clone();
        let data = self.nodes[a.id].data.iter().map(|x| x * c).collect();
        self.push(Op::Scale(c), vec![a.id], shape, data)
    }

    pub fn add_scalar(&mut self, a: Tensor, c: f64) -> Tensor {
        let shape = self.nodes[a.id].shape.clone();
        let data = self.nodes[a.id].data.iter().map(|x| x + c).collect();
        self.push(Op::AddScalar, vec![a.id], shape, data)
    }

    pub fn exp(&mut self, a: Tensor) -> Tensor {
        let shape = self.nodes[a.id].shape.clone();
        let data = self.nodes[a.id].data.iter().map(|x| x.exp()).collect();
        self.push(Op::Exp, vec![a.id], shape, data)
    }

    /// y = x·σ(x).
    pub fn silu(&mut self, a: Tensor) -> Tensor {
        let shape = self.nodes[a.id].shape.clone();
        let data = self.nodes[a.id]
            .data
            .iter()
            .map(|&x| x * sigmoid(x))
            .collect();
        self.push(Op::Silu, vec![a.id], shape, data)
    }

    pub fn sigmoid_op(&mut self, a: Tensor) -> Tensor {
        let shape = self.nodes[a.id].shape.clone();
        let data = self.nodes[a.id].data.iter().map(|&x| sigmoid(x)).collect();
        self.push(Op::Sigmoid, vec![a.id], shape, data)
    }

    /// Clamp values to [lo, hi]; gradient passes only where unclamped.
    pub fn clamp(&mut self, a: Tensor, lo: f64, hi: f64) -> Tensor {
        let shape = self.nodes[a.id].shape.clone();
        let data = self.nodes[a.id]
            .data
            .iter()
            .map(|&x| x.clamp(lo, hi))
            .collect();
        self.push(Op::Clamp(lo, hi), vec![a.id], shape, data)
    }

    // ── Structured ops ──────────────────────────────────────────────

    /// SAME-padded 1D convolution. x: [B, C_in, T], w: [C_out, C_in, K],
    /// b: [C_out]. Output [B, C_out, ⌈T/stride⌉].
    pub fn conv1d(&mut self, x: Tensor, w: Tensor, b: Tensor, stride: usize) -> Result<Tensor> {
        let (batch, c_in, t_in) = self.shape3("conv1d", x)?;
        let (c_out, w_cin, k) = match self.nodes[w.id].shape[..] {
            [a, bb, c] => (a, bb, c),
            ref s => {
                return Err(NnError::ShapeMismatch {
                    op: "conv1d",
                    detail: format!("weight must be rank 3, got {s:?}"),
                })
            }
        };
        if w_cin != c_in {
            return Err(NnError::ShapeMismatch {
                op: "conv1d",
                detail: format!("input channels {c_in} vs weight channels {w_cin}"),
            });
        }
        if k % 2 == 0 {
            return Err(NnError::InvalidArg(format!(
                "conv1d kernel must be odd for SAME padding, got {k}"
            )));
        }
        if !(stride == 1 || stride == 2) {
            return Err(NnError::InvalidArg(format!("conv1d stride must be 1 or 2, got {stride}")));
        }
        if self.nodes[b.id].shape != [c_out] {
            return Err(NnError::ShapeMismatch {
                op: "conv1d",
                detail: format!("bias shape {:?} vs [{c_out}]", self.nodes[b.id].shape),
            });
        }
        let t_out = kernels::conv1d_out_len(t_in, stride);
        let data = kernels::conv1d_forward(
            &self.nodes[x.id].data,
            batch,
            c_in,
            t_in,
            &self.nodes[w.id].data,
            c_out,
            k,
            &self.nodes[b.id].data,
            stride,
        );
        Ok(self.push(
            Op::Conv1d { stride },
            vec![x.id, w.id, b.id],
            vec![batch, c_out, t_out],
            data,
        ))
    }

    /// Group normalization with per-channel affine. x: [B, C, T].
    pub fn group_norm(
        &mut self,
        x: Tensor,
        gamma: Tensor,
        beta: Tensor,
        groups: usize,
        eps: f64,
    ) -> Result<Tensor> {
        let (batch, c, t) = self.shape3("group_norm", x)?;
        if groups == 0 || c % groups != 0 {
            return Err(NnError::InvalidArg(format!(
                "channels {c} not divisible by groups {groups}"
            )));
        }
        if self.nodes[gamma.id].shape != [c] || self.nodes[beta.id].shape != [c] {
            return Err(NnError::ShapeMismatch {
                op: "group_norm",
                detail: "gamma/beta must have shape [C]".into(),
            });
        }
        let data = kernels::group_norm_forward(
            &self.nodes[x.id].data,
            batch,
            c,
            t,
            groups,
            eps,
            &self.nodes[gamma.id].data,
            &self.nodes[beta.id].data,
        );
        Ok(self.push(
            Op::GroupNorm { groups, eps },
            vec![x.id, gamma.id, beta.id],
            vec![batch, c, t],
            data,
        ))
    }

    /// Batched matmul over the leading axis with transpose flags.
    pub fn bmm(&mut self, a: Tensor, b: Tensor, ta: bool, tb: bool) -> Result<Tensor> {
        let (na, p, q) = self.shape3("bmm", a)?;
        let (nb, r, s) = self.shape3("bmm", b)?;
        if na != nb {
            return Err(NnError::ShapeMismatch {
                op: "bmm",
                detail: format!("batch {na} vs {nb}"),
            });
        }
        let (m, k_dim) = if ta { (q, p) } else { (p, q) };
        let (kb, n) = if tb { (s, r) } else { (r, s) };
        if k_dim != kb {
            return Err(NnError::ShapeMismatch {
                op: "bmm",
                detail: format!("inner dims {k_dim} vs {kb}"),
            });
        }
        let data = kernels::bmm_forward(
            &self.nodes[a.id].data,
            &self.nodes[b.id].data,
            na,
            m,
            k_dim,
            n,
            ta,
            tb,
        );
        Ok(self.push(Op::Bmm { ta, tb }, vec![a.id, b.id], vec![na, m, n], data))
    }

    /// Softmax over the last axis of a rank-3 tensor.
    pub fn softmax_last(&mut self, x: Tensor) -> Result<Tensor> {
        let (_, _, c) = self.shape3("softmax_last", x)?;
        let data = kernels::softmax_last_forward(&self.nodes[x.id].data, c);
        let shape = self.nodes[x.id].shape.clone();
        Ok(self.push(Op::SoftmaxLast, vec![x.id], shape, data))
    }

    pub fn reshape(&mut self, x: Tensor, shape: Vec<usize>) -> Result<Tensor> {
        if numel(&shape) != numel(&self.nodes[x.id].shape) {
            return Err(NnError::ShapeMismatch {
                op: "reshape",
                detail: format!("{:?} -> {:?}", self.nodes[x.id].shape, shape),
            });
        }
        let data = self.nodes[x.id].data.clone();
        Ok(self.push(Op::Reshape, vec![x.id], shape, data))
    }

    /// Nearest-neighbor ×2 upsampling along the time axis.
    pub fn upsample_nearest2(&mut self, x: Tensor) -> Result<Tensor> {
        let (b, c, t) = self.shape3("upsample_nearest2", x)?;
        let xs = &self.nodes[x.id].data;
        let mut data = vec![0.0; xs.len() * 2];
        for row in 0..b * c {
            let src = &xs[row * t..(row + 1) * t];
            let dst = &mut data[row * 2 * t..(row + 1) * 2 * t];
            for (i, &v) in src.iter().enumerate() {
                dst[2 * i] = v;
                dst[2 * i + 1] = v;
            }
        }
        Ok(self.push(Op::UpsampleNearest2, vec![x.id], vec![b, c, 2 * t], data))
    }

    /// Mean over the last axis: [B, C, T] → [B, C].
    pub fn mean_last(&mut self, x: Tensor) -> Result<Tensor> {
        let (b, c, t) = self.shape3("mean_last", x)?;
        let xs = &self.nodes[x.id].data;
        let data: Vec<f64> = (0..b * c)
            .map(|row| xs[row * t..(row + 1) * t].iter().sum::<f64>() / t as f64)
            .collect();
        Ok(self.push(Op::MeanLast, vec![x.id], vec![b, c], data))
    }

    /// Fully connected layer: x[B, C] · w[C, D] + b[D].
    pub fn linear(&mut self, x: Tensor, w: Tensor, b: Tensor) -> Result<Tensor> {
        let (batch, c) = match self.nodes[x.id].shape[..] {
            [bb, cc] => (bb, cc),
            ref s => {
                return Err(NnError::ShapeMismatch {
                    op: "linear",
                    detail: format!("input must be rank 2, got {s:?}"),
                })
            }
        };
        let (wc, d) = match self.nodes[w.id].shape[..] {
            [a, bb] => (a, bb),
            ref s => {
                return Err(NnError::ShapeMismatch {
                    op: "linear",
                    detail: format!("weight must be rank 2, got {s:?}"),
                })
            }
        };
        if wc != c || self.nodes[b.id].shape != [d] {
            return Err(NnError::ShapeMismatch {
                op: "linear",
                detail: format!(
                    "x[{batch},{c}] · w[{wc},{d}] + b{:?}",
                    self.nodes[b.id].shape
                ),
            });
        }
        let mut data = vec![0.0; batch * d];
        for (bi, orow) in data.chunks_mut(d).enumerate() {
            orow.copy_from_slice(&self.nodes[b.id].data);
            let xrow = &self.nodes[x.id].data[bi * c..(bi + 1) * c];
            for (ci, &xv) in xrow.iter().enumerate() {
                if xv == 0.0 {
                    continue;
                }
                let wrow = &self.nodes[w.id].data[ci * d..(ci + 1) * d];
                for (o, wv) in orow.iter_mut().zip(wrow) {
                    *o += xv * wv;
                }
            }
        }
        Ok(self.push(Op::Linear, vec![x.id, w.id, b.id], vec![batch, d], data))
    }

    // ── Reductions and losses ───────────────────────────────────────

    /// Sum of all elements, as a scalar (shape []).
    pub fn sum_all(&mut self, x: Tensor) -> Tensor {
        let total: f64 = self.nodes[x.id].data.iter().sum();
        self.push(Op::SumAll, vec![x.id], vec![], vec![total])
    }

    pub fn mean_all(&mut self, x: Tensor) -> Tensor {
        let n = numel(&self.nodes[x.id].shape) as f64;
        let s = self.sum_all(x);
        self.scale(s, 1.0 / n)
    }

    /// Mean squared error over all elements.
    pub fn mse(&mut self, a: Tensor, b: Tensor) -> Result<Tensor> {
        let d = self.sub(a, b)?;
        let sq = self.mul(d, d)?;
        Ok(self.mean_all(sq))
    }

    /// Numerically stable multi-label binary cross-entropy with logits,
    /// mean over all elements. Targets must be a constant 0/1 tensor.
    pub fn bce_with_logits(&mut self, logits: Tensor, targets: Tensor) -> Result<Tensor> {
        self.same_shape("bce_with_logits", logits, targets)?;
        if let Some(&bad) = self.nodes[targets.id]
            .data
            .iter()
            .find(|&&t| t != 0.0 && t != 1.0)
        {
            return Err(NnError::InvalidArg(format!(
                "bce targets must be 0 or 1, found {bad}"
            )));
        }
        let n = self.nodes[logits.id].data.len() as f64;
        let total: f64 = self.nodes[logits.id]
            .data
            .iter()
            .zip(&self.nodes[targets.id].data)
            .map(|(&l, &t)| l.max(0.0) - l * t + (-l.abs()).exp().ln_1p())
            .sum();
        Ok(self.push(
            Op::BceWithLogits,
            vec![logits.id, targets.id],
            vec![],
            vec![total / n],
        ))
    }

    // ── Backward ────────────────────────────────────────────────────

    /// Reverse-mode accumulation from a scalar loss. Gradients of
    /// parameter leaves are added into the store; repeated calls
    /// accumulate additively.
    pub fn backward(&mut self, loss: Tensor, store: &mut ParamStore) -> Result<()> {
        let loss_shape = &self.nodes[loss.id].shape;
        if numel(loss_shape) != 1 {
            return Err(NnError::NonScalarLoss(loss_shape.clone()));
        }

        let mut grads: Vec<Option<Vec<f64>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.id] = Some(vec![1.0]);

        for id in (0..=loss.id).rev() {
            if !self.nodes[id].requires_grad {
                continue;
            }
            let Some(dy) = grads[id].take() else { continue };
            self.node_backward(id, &dy, &mut grads)?;
            grads[id] = Some(dy);
        }

        for (id, node) in self.nodes.iter().enumerate() {
            if let Op::Leaf { param: Some(pid) } = node.op {
                if let Some(g) = &grads[id] {
                    store.accumulate_grad(pid, g)?;
                }
            }
        }
        self.grads = grads;
        Ok(())
    }

    fn accum(grads: &mut [Option<Vec<f64>>], id: usize, len: usize, add: impl FnOnce(&mut [f64])) {
        let slot = grads[id].get_or_insert_with(|| vec![0.0; len]);
        add(slot);
    }

    fn node_backward(
        &self,
        id: usize,
        dy: &[f64],
        grads: &mut [Option<Vec<f64>>],
    ) -> Result<()> {
        let node = &self.nodes[id];
        let needs = |g: &Self, i: usize| g.nodes[i].requires_grad;
        match node.op {
            Op::Constant | Op::Leaf { .. } => {}
            Op::Add => {
                for &inp in &node.inputs {
                    if needs(self, inp) {
                        Self::accum(grads, inp, dy.len(), |g| {
                            g.iter_mut().zip(dy).for_each(|(a, b)| *a += b)
                        });
                    }
                }
            }
            Op::Sub => {
                let (a, b) = (node.inputs[0], node.inputs[1]);
                if needs(self, a) {
                    Self::accum(grads, a, dy.len(), |g| {
                        g.iter_mut().zip(dy).for_each(|(x, d)| *x += d)
                    });
                }
                if needs(self, b) {
                    Self::accum(grads, b, dy.len(), |g| {
                        g.iter_mut().zip(dy).for_each(|(x, d)| *x -= d)
                    });
                }
            }
            Op::Mul => {
                let (a, b) = (node.inputs[0], node.inputs[1]);
                if needs(self, a) {
                    let bd = &self.nodes[b].data;
                    Self::accum(grads, a, dy.len(), |g| {
                        for ((x, d), bv) in g.iter_mut().zip(dy).zip(bd) {
                            *x += d * bv;
                        }
                    });
                }
                if needs(self, b) {
                    let ad = &self.nodes[a].data;
                    Self::accum(grads, b, dy.len(), |g| {
                        for ((x, d), av) in g.iter_mut().zip(dy).zip(ad) {
                            *x += d * av;
                        }
                    });
                }
            }
            Op::Scale(c) => {
                let a = node.inputs[0];
                if needs(self, a) {
                    Self::accum(grads, a, dy.len(), |g| {
                        for (x, d) in g.iter_mut().zip(dy) {
                            *x += d * c;
                        }
                    });
                }
            }
            Op::AddScalar => {
                let a = node.inputs[0];
                if needs(self, a) {
                    Self::accum(grads, a, dy.len(), |g| {
                        g.iter_mut().zip(dy).for_each(|(x, d)| *x += d)
                    });
                }
            }
            Op::Exp => {
                let a = node.inputs[0];
                if needs(self, a) {
                    let y = &node.data;
                    Self::accum(grads, a, dy.len(), |g| {
                        for ((x, d), yv) in g.iter_mut().zip(dy).zip(y) {
                            *x += d * yv;
                        }
                    });
                }
            }
            Op::Silu => {
                let a = node.inputs[0];
                if needs(self, a) {
                    let xs = &self.nodes[a].data;
                    Self::accum(grads, a, dy.len(), |g| {
                        for ((x, d), &xv) in g.iter_mut().zip(dy).zip(xs) {
                            let s = sigmoid(xv);
                            *x += d * s * (1.0 + xv * (1.0 - s));
                        }
                    });
                }
            }
            Op::Sigmoid => {
                let a = node.inputs[0];
                if needs(self, a) {
                    let y = &node.data;
                    Self::accum(grads, a, dy.len(), |g| {
                        for ((x, d), &yv) in g.iter_mut().zip(dy).zip(y) {
                            *x += d * yv * (1.0 - yv);
                        }
                    });
                }
            }
            Op::Clamp(lo, hi) => {
                let a = node.inputs[0];
                if needs(self, a) {
                    let xs = &self.nodes[a].data;
                    Self::accum(grads, a, dy.len(), |g| {
                        for ((x, d), &xv) in g.iter_mut().zip(dy).zip(xs) {
                            if xv >= lo && xv <= hi {
                                *x += d;
                            }
                        }
                    });
                }
            }
            Op::Conv1d { stride } => {
                let (x, w, b) = (node.inputs[0], node.inputs[1], node.inputs[2]);
                let [batch, c_in, t_in] = self.nodes[x].shape[..] else {
                    unreachable!()
                };
                let [c_out, _, k] = self.nodes[w].shape[..] else {
                    unreachable!()
                };
                let t_out = node.shape[2];
                if needs(self, b) {
                    let db = kernels::conv1d_grad_bias(dy, batch, c_out, t_out);
                    Self::accum(grads, b, c_out, |g| {
                        g.iter_mut().zip(&db).for_each(|(a, v)| *a += v)
                    });
                }
                if needs(self, w) {
                    let dw = kernels::conv1d_grad_w(
                        &self.nodes[x].data,
                        dy,
                        batch,
                        c_in,
                        t_in,
                        c_out,
                        k,
                        stride,
                    );
                    Self::accum(grads, w, dw.len(), |g| {
                        g.iter_mut().zip(&dw).for_each(|(a, v)| *a += v)
                    });
                }
                if needs(self, x) {
                    let dx = kernels::conv1d_grad_x(
                        dy,
                        &self.nodes[w].data,
                        batch,
                        c_in,
                        t_in,
                        c_out,
                        k,
                        stride,
                    );
                    Self::accum(grads, x, dx.len(), |g| {
                        g.iter_mut().zip(&dx).for_each(|(a, v)| *a += v)
                    });
                }
            }
            Op::GroupNorm { groups, eps } => {
                let (x, gamma, beta) = (node.inputs[0], node.inputs[1], node.inputs[2]);
                let [batch, c, t] = self.nodes[x].shape[..] else {
                    unreachable!()
                };
                let (dx, dgamma, dbeta) = kernels::group_norm_backward(
                    &self.nodes[x].data,
                    dy,
                    batch,
                    c,
                    t,
                    groups,
                    eps,
                    &self.nodes[gamma].data,
                );
                if needs(self, x) {
                    Self::accum(grads, x, dx.len(), |g| {
                        g.iter_mut().zip(&dx).for_each(|(a, v)| *a += v)
                    });
                }
                if needs(self, gamma) {
                    Self::accum(grads, gamma, c, |g| {
                        g.iter_mut().zip(&dgamma).for_each(|(a, v)| *a += v)
                    });
                }
                if needs(self, beta) {
                    Self::accum(grads, beta, c, |g| {
                        g.iter_mut().zip(&dbeta).for_each(|(a, v)| *a += v)
                    });
                }
            }
            Op::Bmm { ta, tb } => {
                let (a, b) = (node.inputs[0], node.inputs[1]);
                let [batches, m, n] = node.shape[..] else {
                    unreachable!()
                };
                let [_, p, q] = self.nodes[a].shape[..] else {
                    unreachable!()
                };
                let k_dim = if ta { p } else { q };
                let _ = m;
                let (da, db) = kernels::bmm_backward(
                    &self.nodes[a].data,
                    &self.nodes[b].data,
                    dy,
                    batches,
                    node.shape[1],
                    k_dim,
                    n,
                    ta,
                    tb,
                );
                if needs(self, a) {
                    Self::accum(grads, a, da.len(), |g| {
                        g.iter_mut().zip(&da).for_each(|(x, v)| *x += v)
                    });
                }
                if needs(self, b) {
                    Self::accum(grads, b, db.len(), |g| {
                        g.iter_mut().zip(&db).for_each(|(x, v)| *x += v)
                    });
                }
            }
            Op::SoftmaxLast => {
                let a = node.inputs[0];
                if needs(self, a) {
                    let row = *node.shape.last().unwrap();
                    let dx = kernels::softmax_last_backward(&node.data, dy, row);
                    Self::accum(grads, a, dx.len(), |g| {
                        g.iter_mut().zip(&dx).for_each(|(x, v)| *x += v)
                    });
                }
            }
            Op::Reshape => {
                let a = node.inputs[0];
                if needs(self, a) {
                    Self::accum(grads, a, dy.len(), |g| {
                        g.iter_mut().zip(dy).for_each(|(x, d)| *x += d)
                    });
                }
            }
            Op::UpsampleNearest2 => {
                let a = node.inputs[0];
                if needs(self, a) {
                    let t2 = *node.shape.last().unwrap();
                    let t = t2 / 2;
                    let rows = node.data.len() / t2;
                    Self::accum(grads, a, rows * t, |g| {
                        for row in 0..rows {
                            let dyr = &dy[row * t2..(row + 1) * t2];
                            let gr = &mut g[row * t..(row + 1) * t];
                            for (i, gv) in gr.iter_mut().enumerate() {
                                *gv += dyr[2 * i] + dyr[2 * i + 1];
                            }
                        }
                    });
                }
            }
            Op::MeanLast => {
                let a = node.inputs[0];
                if needs(self, a) {
                    let [_, _, t] = self.nodes[a].shape[..] else {
                        unreachable!()
                    };
                    let inv = 1.0 / t as f64;
                    Self::accum(grads, a, self.nodes[a].data.len(), |g| {
                        for (row, &d) in dy.iter().enumerate() {
                            for gv in &mut g[row * t..(row + 1) * t] {
                                *gv += d * inv;
                            }
                        }
                    });
                }
            }
            Op::Linear => {
                let (x, w, b) = (node.inputs[0], node.inputs[1], node.inputs[2]);
                let [batch, c] = self.nodes[x].shape[..] else {
                    unreachable!()
                };
                let d = node.shape[1];
                if needs(self, b) {
                    Self::accum(grads, b, d, |g| {
                        for row in dy.chunks(d) {
                            g.iter_mut().zip(row).for_each(|(a, v)| *a += v);
                        }
                    });
                }
                if needs(self, w) {
                    let xs = &self.nodes[x].data;
                    Self::accum(grads, w, c * d, |g| {
                        for bi in 0..batch {
                            let dyr = &dy[bi * d..(bi + 1) * d];
                            for ci in 0..c {
                                let xv = xs[bi * c + ci];
                                if xv == 0.0 {
                                    continue;
                                }
                                let gr = &mut g[ci * d..(ci + 1) * d];
                                gr.iter_mut().zip(dyr).for_each(|(a, v)| *a += xv * v);
                            }
                        }
                    });
                }
                if needs(self, x) {
                    let ws = &self.nodes[w].data;
                    Self::accum(grads, x, batch * c, |g| {
                        for bi in 0..batch {
                            let dyr = &dy[bi * d..(bi + 1) * d];
                            for ci in 0..c {
                                let wr = &ws[ci * d..(ci + 1) * d];
                                let dot: f64 = wr.iter().zip(dyr).map(|(a, v)| a * v).sum();
                                g[bi * c + ci] += dot;
                            }
                        }
                    });
                }
            }
            Op::SumAll => {
                let a = node.inputs[0];
                if needs(self, a) {
                    let d = dy[0];
                    Self::accum(grads, a, self.nodes[a].data.len(), |g| {
                        g.iter_mut().for_each(|x| *x += d)
                    });
                }
            }
            Op::BceWithLogits => {
                let (l, t) = (node.inputs[0], node.inputs[1]);
                if needs(self, l) {
                    let n = self.nodes[l].data.len() as f64;
                    let d = dy[0] / n;
                    let logits = &self.nodes[l].data;
                    let targets = &self.nodes[t].data;
                    Self::accum(grads, l, logits.len(), |g| {
                        for ((x, &lv), &tv) in g.iter_mut().zip(logits).zip(targets) {
                            *x += d * (sigmoid(lv) - tv);
                        }
                    });
                }
            }
        }
        Ok(())
    }
}
