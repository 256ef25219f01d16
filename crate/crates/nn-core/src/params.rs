use crate::{NnError, Result};
use std::collections::BTreeMap;

/// Handle to one named parameter tensor in a [`ParamStore`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ParamId(pub(crate) usize);

#[derive(Debug, Clone)]
pub(crate) struct ParamEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
    pub grad: Vec<f64>,
    pub frozen: bool,
}

/// Owns every trainable tensor of a model: values, gradient
/// accumulators, and a frozen flag that keeps gradients out of
/// backbone parameters loaded for feature extraction.
#[derive(Debug, Clone, Default)]
pub struct ParamStore {
    entries: Vec<ParamEntry>,
    by_name: BTreeMap<String, usize>,
}

impl ParamStore {
    pub fn new() -> ParamStore {
        ParamStore::default()
    }

    pub fn add(&mut self, name: &str, shape: Vec<usize>, data: Vec<f64>) -> ParamId {
        assert_eq!(
            shape.iter().product::<usize>(),
            data.len(),
            "parameter {name}: data length does not match shape"
        );
        assert!(
            !self.by_name.contains_key(name),
            "duplicate parameter name {name}"
        );
        let id = self.entries.len();
        let grad = vec![0.0; data.len()];
        self.entries.push(ParamEntry {
            name: name.to_string(),
            shape,
            data,
            grad,
            frozen: false,
        });
        self.by_name.insert(name.to_string(), id);
        ParamId(id)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.entries.len()).map(ParamId)
    }

    pub fn id_of(&self, name: &str) -> Option<ParamId> {
        self.by_name.get(name).copied().map(ParamId)
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.entries[id.0].name
    }

    pub fn shape(&self, id: ParamId) -> &[usize] {
        &self.entries[id.0].shape
    }

    pub fn data(&self, id: ParamId) -> &[f64] {
        &self.entries[id.0].data
    }

    pub fn data_mut(&mut self, id: ParamId) -> &mut [f64] {
        &mut self.entries[id.0].data
    }

    pub fn grad(&self, id: ParamId) -> &[f64] {
        &self.entries[id.0].grad
    }

    pub fn is_frozen(&self, id: ParamId) -> bool {
        self.entries[id.0].frozen
    }

    /// Freeze or unfreeze a parameter. Frozen parameters never receive
    /// gradient and are skipped by optimizers.
    pub fn set_frozen(&mut self, id: ParamId, frozen: bool) {
        self.entries[id.0].frozen = frozen;
    }

    pub fn freeze_all(&mut self) {
        for e in &mut self.entries {
            e.frozen = true;
        }
    }

    pub fn zero_grads(&mut self) {
        for e in &mut self.entries {
            e.grad.iter_mut().for_each(|g| *g = 0.0);
        }
    }

    pub(crate) fn accumulate_grad(&mut self, id: ParamId, grad: &[f64]) -> Result<()> {
        let entry = &mut self.entries[id.0];
        if entry.frozen {
            return Err(NnError::InvalidArg(format!(
                "gradient accumulation onto frozen parameter {}",
                entry.name
            )));
        }
        debug_assert_eq!(entry.grad.len(), grad.len());
        for (acc, g) in entry.grad.iter_mut().zip(grad) {
            *acc += g;
        }
        Ok(())
    }

    pub fn total_elements(&self) -> usize {
        self.entries.iter().map(|e| e.data.len()).sum()
    }

    /// Named copies of all parameter tensors, for checkpointing.
    pub fn export(&self) -> Vec<crate::checkpoint::NamedTensor> {
        self.entries
            .iter()
            .map(|e| crate::checkpoint::NamedTensor {
                name: e.name.clone(),
                shape: e.shape.clone(),
                data: e.data.clone(),
            })
            .collect()
    }

    /// Overwrite parameter values from named tensors. Every tensor must
    /// match an existing parameter in name and shape.
    pub fn import(&mut self, tensors: &[crate::checkpoint::NamedTensor]) -> Result<()> {
        for t in tensors {
            let id = self
                .id_of(&t.name)
                .ok_or_else(|| NnError::UnknownParam(t.name.clone()))?;
            if self.shape(id) != t.shape.as_slice() {
                return Err(NnError::ShapeMismatch {
                    op: "import",
                    detail: format!(
                        "parameter {}: checkpoint shape {:?} vs model shape {:?}",
                        t.name,
                        t.shape,
                        self.shape(id)
                    ),
                });
            }
            self.entries[id.0].data.copy_from_slice(&t.data);
        }
        Ok(())
    }
}
