use serde::{Deserialize, Serialize};

use super::{Autoencoder, Gradients};
use crate::error::{Error, Result};
use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
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

/// First/second moment estimates for every parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub m: Gradients<T>,
    pub v: Gradients<T>,
    /// Number of updates applied so far.
    pub t: u64,
    pub config: AdamConfig,
}

impl<T: Real> AdamState<T> {
    pub fn new(model: &Autoencoder<T>, config: AdamConfig) -> Self {
        AdamState {
            m: Gradients::zeros_like(model),
            v: Gradients::zeros_like(model),
            t: 0,
            config,
        }
    }

    /// One bias-corrected Adam update of `model` in place. A non-finite
    /// gradient aborts before anything is modified.
    pub fn step(&mut self, model: &mut Autoencoder<T>, grads: &Gradients<T>) -> Result<()> {
        if !grads.all_finite() {
            return Err(Error::NonFinite(format!("gradient at Adam step {}", self.t + 1)));
        }
        if grads.weights.len() != model.layers.len() {
            return Err(Error::shape("Adam gradients", model.layers.len(), grads.weights.len()));
        }
        self.t += 1;
        for (i, layer) in model.layers.iter_mut().enumerate() {
            if grads.weights[i].dim() != layer.weights.dim() || grads.biases[i].len() != layer.bias.len() {
                return Err(Error::shape("Adam gradients", layer.weights.dim(), grads.weights[i].dim()));
            }
            adam_update(
                layer.weights.as_slice_mut().expect("standard layout"),
                grads.weights[i].as_slice().expect("standard layout"),
                self.m.weights[i].as_slice_mut().unwrap(),
                self.v.weights[i].as_slice_mut().unwrap(),
                self.t,
                &self.config,
            );
            adam_update(
                layer.bias.as_slice_mut().unwrap(),
                grads.biases[i].as_slice().unwrap(),
                self.m.biases[i].as_slice_mut().unwrap(),
                self.v.biases[i].as_slice_mut().unwrap(),
                self.t,
                &self.config,
            );
        }
        Ok(())
    }
}

/// Adam on flat buffers; `t` is the 1-based step number after increment.
pub fn adam_update<T: Real>(
    params: &mut [T],
    grads: &[T],
    m: &mut [T],
    v: &mut [T],
    t: u64,
    cfg: &AdamConfig,
) {
    let b1 = T::of(cfg.beta1);
    let b2 = T::of(cfg.beta2);
    let one = T::one();
    let bc1 = T::of(1.0 - cfg.beta1.powf(t as f64));
    let bc2 = T::of(1.0 - cfg.beta2.powf(t as f64));
    let lr = T::of(cfg.lr);
    let eps = T::of(cfg.eps);
    for (((p, &g), m), v) in params.iter_mut().zip(grads).zip(m.iter_mut()).zip(v.iter_mut()) {
        *m = b1 * *m + (one - b1) * g;
        *v = b2 * *v + (one - b2) * g * g;
        let m_hat = *m / bc1;
        let v_hat = *v / bc2;
        *p = *p - lr * m_hat / (v_hat.sqrt() + eps);
    }
}
