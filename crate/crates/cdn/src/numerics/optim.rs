//! Plain SGD and Adam. Dense updates over every trainable slot; gradients
//! are zeroed after each step.

use crate::error::Result;
use crate::numerics::{Matrix, ParamStore};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

pub enum Optimizer {
    Sgd(Sgd),
    Adam(Adam),
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, lr: f64, store: &ParamStore) -> Self {
        match kind {
            OptimizerKind::Sgd => Optimizer::Sgd(Sgd { lr }),
            OptimizerKind::Adam => Optimizer::Adam(Adam::new(lr, store)),
        }
    }

    pub fn step(&mut self, store: &mut ParamStore) -> Result<()> {
        match self {
            Optimizer::Sgd(s) => s.step(store),
            Optimizer::Adam(a) => a.step(store),
        }
    }

    pub fn adam_state(&self) -> Option<&Adam> {
        match self {
            Optimizer::Adam(a) => Some(a),
            Optimizer::Sgd(_) => None,
        }
    }

    pub fn adam_state_mut(&mut self) -> Option<&mut Adam> {
        match self {
            Optimizer::Adam(a) => Some(a),
            Optimizer::Sgd(_) => None,
        }
    }
}

pub struct Sgd {
    pub lr: f64,
}

impl Sgd {
    pub fn step(&self, store: &mut ParamStore) -> Result<()> {
        for id in store.ids().collect::<Vec<_>>() {
            if store.trainable(id) {
                let (value, grad) = store.value_grad_mut(id);
                for (v, &g) in value.data_mut().iter_mut().zip(grad.data()) {
                    *v -= self.lr * g;
                }
            }
        }
        store.zero_grads();
        Ok(())
    }
}

pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub t: u64,
    pub m: Vec<Matrix>,
    pub v: Vec<Matrix>,
}

impl Adam {
    pub fn new(lr: f64, store: &ParamStore) -> Self {
        let m = store
            .ids()
            .map(|id| {
                let (r, c) = store.value(id).shape();
                Matrix::zeros(r, c)
            })
            .collect::<Vec<_>>();
        let v = m.clone();
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m,
            v,
        }
    }

    pub fn step(&mut self, store: &mut ParamStore) -> Result<()> {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for id in store.ids().collect::<Vec<_>>() {
            if !store.trainable(id) {
                continue;
            }
            let m = &mut self.m[id.0];
            let v = &mut self.v[id.0];
            let (value, grad) = store.value_grad_mut(id);
            for (((p, g), mm), vv) in value
                .data_mut()
                .iter_mut()
                .zip(grad.data())
                .zip(m.data_mut())
                .zip(v.data_mut())
            {
                *mm = self.beta1 * *mm + (1.0 - self.beta1) * g;
                *vv = self.beta2 * *vv + (1.0 - self.beta2) * g * g;
                let m_hat = *mm / bc1;
                let v_hat = *vv / bc2;
                *p -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
        store.zero_grads();
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sgd_zero_gradient_is_noop() {
        let mut store = ParamStore::new();
        let id = store.register("w", Matrix::from_rows(&[&[1.5]])).unwrap();
        let sgd = Sgd { lr: 1.0 };
        sgd.step(&mut store).unwrap();
        assert_eq!(store.value(id).data(), &[1.5]);
    }

    #[test]
    fn sgd_unit_lr_subtracts_gradient() {
        let mut store = ParamStore::new();
        let id = store.register("w", Matrix::from_rows(&[&[2.0]])).unwrap();
        store.grad_mut(id).data_mut()[0] = 0.25;
        let sgd = Sgd { lr: 1.0 };
        sgd.step(&mut store).unwrap();
        assert_eq!(store.value(id).data(), &[1.75]);
        assert_eq!(store.grad(id).data(), &[0.0], "gradients zeroed after step");
    }

    #[test]
    fn adam_first_step_matches_hand_recurrence() {
        // one step with gradient g: m=(1-b1)g, v=(1-b2)g^2, m_hat=g, v_hat=g^2
        // => delta = lr * g / (|g| + eps) ~= lr * sign(g)
        let g = -0.3;
        let lr = 1e-3;
        let mut store = ParamStore::new();
        let id = store.register("w", Matrix::from_rows(&[&[1.0]])).unwrap();
        store.grad_mut(id).data_mut()[0] = g;
        let mut adam = Adam::new(lr, &store);
        adam.step(&mut store).unwrap();
        let expected = 1.0 - lr * g / (g.abs() + 1e-8);
        assert!((store.value(id).data()[0] - expected).abs() < 1e-15);
        // sign of update is -sign(g): param moved up for negative gradient
        assert!(store.value(id).data()[0] > 1.0);
        assert!((store.value(id).data()[0] - 1.0 - lr).abs() < 1e-6);
    }

    #[test]
    fn adam_skips_frozen_slots() {
        let mut store = ParamStore::new();
        let a = store.register("a", Matrix::from_rows(&[&[1.0]])).unwrap();
        let b = store.register("b", Matrix::from_rows(&[&[1.0]])).unwrap();
        store.grad_mut(a).data_mut()[0] = 1.0;
        store.grad_mut(b).data_mut()[0] = 1.0;
        store.set_trainable(b, false);
        let mut adam = Adam::new(0.1, &store);
        adam.step(&mut store).unwrap();
        assert!(store.value(a).data()[0] < 1.0);
        assert_eq!(store.value(b).data()[0], 1.0);
    }
}
