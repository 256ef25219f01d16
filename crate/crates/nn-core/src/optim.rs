use crate::params::ParamStore;
use crate::{NnError, Result};
use serde::{Deserialize, Serialize};

/// AdamW hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamW {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamW {
    fn default() -> Self {
        AdamW {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.01,
        }
    }
}

/// First/second moment accumulators plus the step counter.
#[derive(Debug, Clone)]
pub struct OptimizerState {
    pub hyper: AdamW,
    pub step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl OptimizerState {
    pub fn new(store: &ParamStore, hyper: AdamW) -> OptimizerState {
        let m = store.ids().map(|id| vec![0.0; store.data(id).len()]).collect();
        let v = store.ids().map(|id| vec![0.0; store.data(id).len()]).collect();
        OptimizerState { hyper, step: 0, m, v }
    }

    /// Moments flattened to named tensors, for checkpointing alongside
    /// the parameters they shadow.
    pub fn export(&self, store: &ParamStore) -> Vec<crate::checkpoint::NamedTensor> {
        let mut out = Vec::new();
        for id in store.ids() {
            let name = store.name(id);
            let shape = store.shape(id).to_vec();
            out.push(crate::checkpoint::NamedTensor {
                name: format!("optim.m.{name}"),
                shape: shape.clone(),
                data: self.m[id.0].clone(),
            });
            out.push(crate::checkpoint::NamedTensor {
                name: format!("optim.v.{name}"),
                shape,
                data: self.v[id.0].clone(),
            });
        }
        out
    }

    pub fn import(
        &mut self,
        store: &ParamStore,
        tensors: &[crate::checkpoint::NamedTensor],
        step: u64,
    ) -> Result<()> {
        for t in tensors {
            let (which, pname) = if let Some(rest) = t.name.strip_prefix("optim.m.") {
                (0, rest)
            } else if let Some(rest) = t.name.strip_prefix("optim.v.") {
                (1, rest)
            } else {
                continue;
            };
            let id = store
                .id_of(pname)
                .ok_or_else(|| NnError::UnknownParam(t.name.clone()))?;
            let buf = if which == 0 { &mut self.m[id.0] } else { &mut self.v[id.0] };
            if buf.len() != t.data.len() {
                return Err(NnError::ShapeMismatch {
                    op: "optimizer import",
                    detail: format!("moment {} length {} vs {}", t.name, t.data.len(), buf.len()),
                });
            }
            buf.copy_from_slice(&t.data);
        }
        self.step = step;
        Ok(())
    }
}

/// One AdamW update from the store's accumulated gradients. Decoupled
/// decay shrinks parameters before the Adam-scaled step; moments are
/// bias-corrected. Frozen parameters are untouched. Errors on any
/// non-finite gradient.
pub fn adamw_step(store: &mut ParamStore, state: &mut OptimizerState) -> Result<()> {
    state.step += 1;
    let t = state.step;
    let h = state.hyper;
    let bc1 = 1.0 - h.beta1.powi(t as i32);
    let bc2 = 1.0 - h.beta2.powi(t as i32);

    for id in store.ids().collect::<Vec<_>>() {
        if store.is_frozen(id) {
            continue;
        }
        if let Some(_bad) = store.grad(id).iter().find(|g| !g.is_finite()) {
            return Err(NnError::NonFiniteGradient(store.name(id).to_string()));
        }
        let m = &mut state.m[id.0];
        let v = &mut state.v[id.0];
        let grads: Vec<f64> = store.grad(id).to_vec();
        let data = store.data_mut(id);
        for i in 0..data.len() {
            let g = grads[i];
            data[i] *= 1.0 - h.lr * h.weight_decay;
            m[i] = h.beta1 * m[i] + (1.0 - h.beta1) * g;
            v[i] = h.beta2 * v[i] + (1.0 - h.beta2) * g * g;
            let m_hat = m[i] / bc1;
            let v_hat = v[i] / bc2;
            data[i] -= h.lr * m_hat / (v_hat.sqrt() + h.eps);
        }
    }
    Ok(())
}

/// OneCycle schedule: cosine ramp lr_initial→lr_max over the warm-up
/// fraction, then cosine anneal lr_max→lr_final.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LrSchedule {
    pub total_steps: u64,
    pub lr_initial: f64,
    pub lr_max: f64,
    pub lr_final: f64,
    pub pct_warmup: f64,
}

impl LrSchedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.pct_warmup > 0.0 && self.pct_warmup < 1.0) {
            return Err(NnError::InvalidArg(format!(
                "pct_warmup must lie in (0,1), got {}",
                self.pct_warmup
            )));
        }
        if self.total_steps == 0 {
            return Err(NnError::InvalidArg("total_steps must be positive".into()));
        }
        if !(self.lr_initial > 0.0 && self.lr_max > 0.0 && self.lr_final > 0.0) {
            return Err(NnError::InvalidArg("learning rates must be positive".into()));
        }
        Ok(())
    }
}

pub fn onecycle_lr(step: u64, sched: &LrSchedule) -> Result<f64> {
    sched.validate()?;
    if step > sched.total_steps {
        return Err(NnError::StepOutOfRange {
            step,
            total: sched.total_steps,
        });
    }
    let warm = sched.pct_warmup * sched.total_steps as f64;
    let s = step as f64;
    let lr = if s < warm {
        let p = s / warm;
        sched.lr_initial
            + (sched.lr_max - sched.lr_initial) * (1.0 - (std::f64::consts::PI * p).cos()) / 2.0
    } else {
        let denom = sched.total_steps as f64 - warm;
        let p = if denom > 0.0 { (s - warm) / denom } else { 1.0 };
        sched.lr_final
            + (sched.lr_max - sched.lr_final) * (1.0 + (std::f64::consts::PI * p).cos()) / 2.0
    };
    Ok(lr)
}
