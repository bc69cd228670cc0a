//! Named parameter slots with mirrored gradient accumulators.

use std::collections::HashMap;

use crate::error::{CdnError, Result};
use crate::numerics::Matrix;

/// Handle to a parameter slot. Stable for the lifetime of the store.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ParamId(pub(crate) usize);

struct Slot {
    name: String,
    value: Matrix,
    grad: Matrix,
    trainable: bool,
}

/// All learnable arrays of a model: embedding tables, layer weights, biases,
/// the gate matrix. Each slot keeps a gradient accumulator of identical shape.
pub struct ParamStore {
    slots: Vec<Slot>,
    index: HashMap<String, usize>,
}

impl ParamStore {
    pub fn new() -> Self {
        ParamStore {
            slots: Vec::new(),
            index: HashMap::new(),
        }
    }

    pub fn register(&mut self, name: &str, value: Matrix) -> Result<ParamId> {
        if self.index.contains_key(name) {
            return Err(CdnError::Model(format!("duplicate parameter name {name:?}")));
        }
        let grad = Matrix::zeros(value.rows(), value.cols());
        let id = self.slots.len();
        self.index.insert(name.to_string(), id);
        self.slots.push(Slot {
            name: name.to_string(),
            value,
            grad,
            trainable: true,
        });
        Ok(ParamId(id))
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.index.get(name).copied().map(ParamId)
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    /// Total number of scalar parameters.
    pub fn n_scalars(&self) -> usize {
        self.slots.iter().map(|s| s.value.len()).sum()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.slots.iter().map(|s| s.name.as_str())
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.slots.len()).map(ParamId)
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.slots[id.0].name
    }

    pub fn value(&self, id: ParamId) -> &Matrix {
        &self.slots[id.0].value
    }

    pub fn value_mut(&mut self, id: ParamId) -> &mut Matrix {
        &mut self.slots[id.0].value
    }

    pub fn grad(&self, id: ParamId) -> &Matrix {
        &self.slots[id.0].grad
    }

    pub fn grad_mut(&mut self, id: ParamId) -> &mut Matrix {
        &mut self.slots[id.0].grad
    }

    /// Split borrow for optimizer updates: mutable value, shared gradient.
    pub fn value_grad_mut(&mut self, id: ParamId) -> (&mut Matrix, &Matrix) {
        let slot = &mut self.slots[id.0];
        (&mut slot.value, &slot.grad)
    }

    pub fn set_trainable(&mut self, id: ParamId, trainable: bool) {
        self.slots[id.0].trainable = trainable;
    }

    pub fn trainable(&self, id: ParamId) -> bool {
        self.slots[id.0].trainable
    }

    pub fn zero_grads(&mut self) {
        for slot in &mut self.slots {
            slot.grad.fill(0.0);
        }
    }

    /// Sum of squared gradient entries, for diagnostics.
    pub fn grad_norm(&self) -> f64 {
        self.slots
            .iter()
            .map(|s| s.grad.data().iter().map(|v| v * v).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }

    pub fn param_norm(&self) -> f64 {
        self.slots
            .iter()
            .map(|s| s.value.data().iter().map(|v| v * v).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }
}

impl Default for ParamStore {
    fn default() -> Self {
        Self::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn register_rejects_duplicate_names() {
        let mut store = ParamStore::new();
        store.register("w", Matrix::zeros(2, 2)).unwrap();
        assert!(store.register("w", Matrix::zeros(1, 1)).is_err());
    }

    #[test]
    fn grad_shape_mirrors_value() {
        let mut store = ParamStore::new();
        let id = store.register("emb", Matrix::zeros(5, 3)).unwrap();
        assert_eq!(store.grad(id).shape(), (5, 3));
    }
}
