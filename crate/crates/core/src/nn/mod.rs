//! Dense mirror autoencoder with an analytic backward pass.
//!
//! The trace index of an activation is its depth: `a[0]` is the input,
//! `a[i]` the output of layer `i`, `a[L]` the reconstruction. Losses
//! attached to hidden layers are injected into [`Autoencoder::backward`] by
//! trace index.

mod adam;
mod checkpoint;

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

pub use adam::{adam_update, AdamConfig, AdamState};
pub use checkpoint::Checkpoint;

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;
use crate::Real;

/// Logistic outputs are clamped to `[LOGISTIC_CLAMP, 1 - LOGISTIC_CLAMP]`.
pub const LOGISTIC_CLAMP: f64 = 1e-7;

/// Encoder hidden widths of the standard architecture; the decoder mirrors them.
pub const STANDARD_HIDDEN: [usize; 3] = [500, 500, 2000];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Logistic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerSpec {
    pub in_dim: usize,
    pub out_dim: usize,
    pub activation: Activation,
}

/// Layer widths of a mirror autoencoder `d-h1-..-hn-c-hn-..-h1-d`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AutoencoderSpec {
    pub input_dim: usize,
    pub hidden: Vec<usize>,
    pub latent_dim: usize,
}

impl AutoencoderSpec {
    /// `d-500-500-2000-c-2000-500-500-d`.
    pub fn standard(input_dim: usize, latent_dim: usize) -> Self {
        AutoencoderSpec {
            input_dim,
            hidden: STANDARD_HIDDEN.to_vec(),
            latent_dim,
        }
    }

    /// Latent code and reconstruction layers are logistic, all others ReLU.
    pub fn layer_specs(&self) -> Vec<LayerSpec> {
        let mut dims = vec![self.input_dim];
        dims.extend(&self.hidden);
        dims.push(self.latent_dim);
        dims.extend(self.hidden.iter().rev());
        dims.push(self.input_dim);
        let latent = self.hidden.len() + 1;
        let last = dims.len() - 1;
        dims.windows(2)
            .enumerate()
            .map(|(i, w)| LayerSpec {
                in_dim: w[0],
                out_dim: w[1],
                activation: if i + 1 == latent || i + 1 == last {
                    Activation::Logistic
                } else {
                    Activation::Relu
                },
            })
            .collect()
    }

    fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.latent_dim == 0 || self.hidden.contains(&0) {
            return Err(Error::Argument(format!(
                "all layer widths must be at least 1: {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dense<T> {
    /// `out_dim x in_dim`.
    pub weights: Array2<T>,
    pub bias: Array1<T>,
    pub activation: Activation,
}

impl<T: Real> Dense<T> {
    pub fn in_dim(&self) -> usize {
        self.weights.ncols()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.nrows()
    }

    fn apply(&self, input: ArrayView2<T>) -> Array2<T> {
        let mut z = input.dot(&self.weights.t());
        z += &self.bias;
        activate(self.activation, &mut z);
        z
    }
}

fn activate<T: Real>(activation: Activation, z: &mut Array2<T>) {
    match activation {
        Activation::Relu => z.mapv_inplace(|v| if v > T::zero() { v } else { T::zero() }),
        Activation::Logistic => {
            let lo = T::of(LOGISTIC_CLAMP);
            let hi = T::one() - lo;
            z.mapv_inplace(|v| {
                let s = T::one() / (T::one() + (-v).exp());
                s.max(lo).min(hi)
            })
        }
    }
}

/// Weights and biases of the mirror autoencoder.
#[derive(Debug, Clone, PartialEq)]
pub struct Autoencoder<T> {
    pub layers: Vec<Dense<T>>,
    /// Trace index of the latent code `z`.
    pub latent_index: usize,
}

/// Post-activation outputs of every layer for one batch.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace<T> {
    pub activations: Vec<Array2<T>>,
    pub latent_index: usize,
}

impl<T: Real> ForwardTrace<T> {
    pub fn input(&self) -> &Array2<T> {
        &self.activations[0]
    }

    pub fn output(&self) -> &Array2<T> {
        self.activations.last().expect("trace holds at least the input")
    }

    pub fn latent(&self) -> &Array2<T> {
        &self.activations[self.latent_index]
    }
}

/// Parameter gradients (or any parameter-shaped buffer).
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T> {
    pub weights: Vec<Array2<T>>,
    pub biases: Vec<Array1<T>>,
}

impl<T: Real> Gradients<T> {
    pub fn zeros_like(model: &Autoencoder<T>) -> Self {
        Gradients {
            weights: model.layers.iter().map(|l| Array2::zeros(l.weights.dim())).collect(),
            biases: model.layers.iter().map(|l| Array1::zeros(l.bias.len())).collect(),
        }
    }

    pub fn all_finite(&self) -> bool {
        self.weights.iter().all(|w| w.iter().all(|v| v.is_finite()))
            && self.biases.iter().all(|b| b.iter().all(|v| v.is_finite()))
    }

    /// Every entry, layer by layer: weights row-major, then that layer's bias.
    pub fn flatten(&self) -> Vec<T> {
        self.weights
            .iter()
            .zip(&self.biases)
            .flat_map(|(w, b)| w.iter().chain(b.iter()).copied())
            .collect()
    }
}

pub fn build_autoencoder<T: Real>(input_dim: usize, latent_dim: usize, seed: u64) -> Result<Autoencoder<T>> {
    Autoencoder::init(&AutoencoderSpec::standard(input_dim, latent_dim), seed)
}

impl<T: Real> Autoencoder<T> {
    /// He-normal weights (variance `2 / fan_in`) on every layer, zero biases.
    pub fn init(spec: &AutoencoderSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        let mut rng = rng_from_seed(seed);
        let layers = spec
            .layer_specs()
            .into_iter()
            .map(|ls| {
                let std = (2.0 / ls.in_dim as f64).sqrt();
                let normal = Normal::new(0.0, std).expect("positive std");
                let weights = Array2::from_shape_simple_fn((ls.out_dim, ls.in_dim), || {
                    T::of(normal.sample(&mut rng))
                });
                Dense {
                    weights,
                    bias: Array1::zeros(ls.out_dim),
                    activation: ls.activation,
                }
            })
            .collect();
        Ok(Autoencoder {
            layers,
            latent_index: spec.hidden.len() + 1,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn latent_dim(&self) -> usize {
        self.layers[self.latent_index - 1].out_dim()
    }

    /// Width of trace entry `index` (0 = input).
    pub fn width(&self, index: usize) -> usize {
        if index == 0 {
            self.input_dim()
        } else {
            self.layers[index - 1].out_dim()
        }
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub fn forward(&self, x: ArrayView2<T>) -> Result<ForwardTrace<T>> {
        self.check_input(x)?;
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(x.to_owned());
        for layer in &self.layers {
            let next = layer.apply(activations.last().unwrap().view());
            activations.push(next);
        }
        Ok(ForwardTrace {
            activations,
            latent_index: self.latent_index,
        })
    }

    /// Latent codes only, computed in row chunks of `chunk` to bound memory.
    pub fn encode(&self, x: ArrayView2<T>, chunk: usize) -> Result<Array2<T>> {
        self.check_input(x)?;
        let mut out = Array2::zeros((x.nrows(), self.latent_dim()));
        for (src, mut dst) in x
            .axis_chunks_iter(Axis(0), chunk.max(1))
            .zip(out.axis_chunks_iter_mut(Axis(0), chunk.max(1)))
        {
            let mut a = src.to_owned();
            for layer in &self.layers[..self.latent_index] {
                a = layer.apply(a.view());
            }
            dst.assign(&a);
        }
        Ok(out)
    }

    fn check_input(&self, x: ArrayView2<T>) -> Result<()> {
        if x.ncols() != self.input_dim() {
            return Err(Error::shape("autoencoder input columns", self.input_dim(), x.ncols()));
        }
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("autoencoder input".into()));
        }
        Ok(())
    }

    /// Reverse-mode gradients of `loss(a[L]) + sum_i loss_i(a[i])`, given
    /// `dloss/da[L]` and the injected `dloss_i/da[i]` as `(i, grad)` pairs.
    pub fn backward(
        &self,
        trace: &ForwardTrace<T>,
        output_grad: ArrayView2<T>,
        layer_grads: &[(usize, Array2<T>)],
    ) -> Result<Gradients<T>> {
        let depth = self.layers.len();
        if trace.activations.len() != depth + 1 {
            return Err(Error::shape("trace depth", depth + 1, trace.activations.len()));
        }
        if output_grad.dim() != trace.output().dim() {
            return Err(Error::shape("output gradient", trace.output().dim(), output_grad.dim()));
        }
        for (idx, g) in layer_grads {
            if *idx == 0 || *idx > depth {
                return Err(Error::Argument(format!(
                    "layer gradient index {idx} outside 1..={depth}"
                )));
            }
            if g.dim() != trace.activations[*idx].dim() {
                return Err(Error::shape(
                    "injected layer gradient",
                    trace.activations[*idx].dim(),
                    g.dim(),
                ));
            }
        }

        let mut grads = Gradients::zeros_like(self);
        let mut delta = output_grad.to_owned();
        for l in (1..=depth).rev() {
            for (_, g) in layer_grads.iter().filter(|(i, _)| *i == l) {
                delta += g;
            }
            let a = &trace.activations[l];
            match self.layers[l - 1].activation {
                Activation::Relu => Zip::from(&mut delta).and(a).for_each(|d, &a| {
                    if a <= T::zero() {
                        *d = T::zero();
                    }
                }),
                Activation::Logistic => {
                    let lo = T::of(LOGISTIC_CLAMP);
                    let hi = T::one() - lo;
                    // the clamp is flat, so saturated entries pass nothing back
                    Zip::from(&mut delta).and(a).for_each(|d, &a| {
                        *d = if a <= lo || a >= hi { T::zero() } else { *d * a * (T::one() - a) }
                    })
                }
            }
            grads.weights[l - 1] = delta.t().dot(&trace.activations[l - 1]);
            grads.biases[l - 1] = delta.sum_axis(Axis(0));
            if l > 1 {
                delta = delta.dot(&self.layers[l - 1].weights);
            }
        }
        Ok(grads)
    }

    /// Visits every parameter in [`Gradients::flatten`] order.
    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut T> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weights.iter_mut().chain(l.bias.iter_mut()))
    }

    pub fn all_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(l.bias.iter()).all(|v| v.is_finite()))
    }
}
