use crate::param::{ParamId, ParamStore};
use crate::real::Real;
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        AdamConfig {
            lr,
            ..Default::default()
        }
    }
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Adam with bias correction over a fixed group of parameters.
///
/// Two optimizers may share a store as long as each owns its own moments;
/// `step` only touches (and then zeroes the gradients of) its own group.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam<T> {
    pub config: AdamConfig,
    group: Vec<ParamId>,
    m: Vec<Tensor<T>>,
    v: Vec<Tensor<T>>,
    t: u64,
}

impl<T: Real> Adam<T> {
    pub fn new(config: AdamConfig, store: &ParamStore<T>, group: Vec<ParamId>) -> Self {
        let m = group
            .iter()
            .map(|&id| Tensor::zeros(store.value(id).shape()))
            .collect::<Vec<_>>();
        let v = m.clone();
        Adam {
            config,
            group,
            m,
            v,
            t: 0,
        }
    }

    pub fn group(&self) -> &[ParamId] {
        &self.group
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn moments(&self) -> (&[Tensor<T>], &[Tensor<T>]) {
        (&self.m, &self.v)
    }

    /// Restores moments and step counter, e.g. from a checkpoint.
    pub fn restore(&mut self, m: Vec<Tensor<T>>, v: Vec<Tensor<T>>, t: u64) {
        assert_eq!(m.len(), self.group.len());
        assert_eq!(v.len(), self.group.len());
        self.m = m;
        self.v = v;
        self.t = t;
    }

    pub fn step(&mut self, store: &mut ParamStore<T>) {
        self.t += 1;
        let c = &self.config;
        let (b1, b2) = (T::from_lit(c.beta1), T::from_lit(c.beta2));
        let one = T::one();
        let bc1 = T::from_lit(1.0 - c.beta1.powi(self.t as i32));
        let bc2 = T::from_lit(1.0 - c.beta2.powi(self.t as i32));
        let lr = T::from_lit(c.lr);
        let eps = T::from_lit(c.eps);
        for (k, &id) in self.group.iter().enumerate() {
            let p = store.get_mut(id);
            let (m, v) = (self.m[k].data_mut(), self.v[k].data_mut());
            for (((w, g), mi), vi) in p
                .value
                .data_mut()
                .iter_mut()
                .zip(p.grad.data())
                .zip(m.iter_mut())
                .zip(v.iter_mut())
            {
                *mi = b1 * *mi + (one - b1) * *g;
                *vi = b2 * *vi + (one - b2) * *g * *g;
                let m_hat = *mi / bc1;
                let v_hat = *vi / bc2;
                *w -= lr * m_hat / (v_hat.sqrt() + eps);
            }
            p.grad.fill(T::zero());
        }
    }
}
