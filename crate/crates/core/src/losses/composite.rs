use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::bce::bce_loss;
use super::snnl::{snnl, snnl_unsupervised, SnnlOutput};
use super::temperature::TemperatureSchedule;
use crate::error::{Error, Result};
use crate::nn::ForwardTrace;
use crate::Real;

/// How per-layer soft nearest neighbor losses combine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayerMode {
    Sum,
    /// Only the layer with the lowest loss contributes, this step.
    Argmin,
}

pub const DEFAULT_ALPHA: f64 = 100.0;
/// Encoder hidden layers plus the latent code, by trace index.
pub const DEFAULT_SNNL_LAYERS: [usize; 4] = [1, 2, 3, 4];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnnlConfig {
    pub supervised: bool,
    pub layer_mode: LayerMode,
    pub schedule: TemperatureSchedule,
    pub alpha: f64,
    /// Trace indices the loss is attached to.
    pub layers: Vec<usize>,
}

/// Training objective: reconstruction alone, or reconstruction plus
/// `alpha *` soft nearest neighbor loss.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "objective", rename_all = "kebab-case")]
pub enum LossConfig {
    Reconstruction,
    Composite(SnnlConfig),
}

impl LossConfig {
    pub fn baseline() -> Self {
        LossConfig::Reconstruction
    }

    /// Rows 1..=8 of the configuration table: odd rows supervised, rows 1-4
    /// fixed temperature, rows 3, 4, 7, 8 take the argmin over layers.
    pub fn table_row(row: u8) -> Result<Self> {
        if !(1..=8).contains(&row) {
            return Err(Error::Argument(format!("no SNNL configuration {row}; expected 1..=8")));
        }
        Ok(LossConfig::Composite(SnnlConfig {
            supervised: row % 2 == 1,
            layer_mode: if matches!(row, 3 | 4 | 7 | 8) {
                LayerMode::Argmin
            } else {
                LayerMode::Sum
            },
            schedule: if row <= 4 {
                TemperatureSchedule::fixed()
            } else {
                TemperatureSchedule::annealing()
            },
            alpha: DEFAULT_ALPHA,
            layers: DEFAULT_SNNL_LAYERS.to_vec(),
        }))
    }

    /// `"baseline-ae"` or `"snnl-1"` .. `"snnl-8"`.
    pub fn from_shorthand(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        if s == "baseline-ae" {
            return Ok(LossConfig::baseline());
        }
        s.strip_prefix("snnl-")
            .and_then(|n| n.parse::<u8>().ok())
            .ok_or_else(|| Error::Argument(format!("unknown loss configuration {s:?}")))
            .and_then(LossConfig::table_row)
    }

    pub fn snnl(&self) -> Option<&SnnlConfig> {
        match self {
            LossConfig::Reconstruction => None,
            LossConfig::Composite(c) => Some(c),
        }
    }

    pub fn snnl_mut(&mut self) -> Option<&mut SnnlConfig> {
        match self {
            LossConfig::Reconstruction => None,
            LossConfig::Composite(c) => Some(c),
        }
    }

    pub fn is_supervised(&self) -> bool {
        self.snnl().is_some_and(|c| c.supervised)
    }

    pub fn validate(&self, depth: usize) -> Result<()> {
        let Some(c) = self.snnl() else { return Ok(()) };
        if !(c.alpha >= 0.0 && c.alpha.is_finite()) {
            return Err(Error::Argument(format!("alpha must be non-negative, got {}", c.alpha)));
        }
        if c.layers.is_empty() {
            return Err(Error::Argument("soft nearest neighbor loss needs at least one layer".into()));
        }
        if let Some(&bad) = c.layers.iter().find(|&&l| l == 0 || l > depth) {
            return Err(Error::Argument(format!("layer index {bad} outside 1..={depth}")));
        }
        c.schedule.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LossReport<T> {
    pub total: T,
    pub reconstruction: T,
    /// `(trace index, loss)` for every configured layer.
    pub snnl_per_layer: Vec<(usize, T)>,
    pub chosen_layer: Option<usize>,
    pub temperature: Option<f64>,
}

impl<T: Real> LossReport<T> {
    /// The combined soft nearest neighbor term before weighting by alpha.
    pub fn snnl_aggregate(&self) -> Option<T> {
        if self.snnl_per_layer.is_empty() {
            return None;
        }
        Some(match self.chosen_layer {
            Some(l) => self.snnl_per_layer.iter().find(|(i, _)| *i == l).unwrap().1,
            None => self.snnl_per_layer.iter().map(|(_, v)| *v).sum(),
        })
    }
}

/// Loss values plus the gradients [`crate::nn::Autoencoder::backward`] needs.
#[derive(Debug, Clone)]
pub struct CompositeOutput<T> {
    pub report: LossReport<T>,
    pub output_grad: Array2<T>,
    pub layer_grads: Vec<(usize, Array2<T>)>,
}

pub fn composite_loss<T: Real>(
    config: &LossConfig,
    trace: &ForwardTrace<T>,
    labels: Option<&[usize]>,
    epoch: usize,
) -> Result<CompositeOutput<T>> {
    let depth = trace.activations.len() - 1;
    config.validate(depth)?;
    let x = trace.input();
    let (reconstruction, output_grad) = bce_loss(x.view(), trace.output().view())?;
    let Some(c) = config.snnl() else {
        return Ok(CompositeOutput {
            report: LossReport {
                total: reconstruction,
                reconstruction,
                snnl_per_layer: Vec::new(),
                chosen_layer: None,
                temperature: None,
            },
            output_grad,
            layer_grads: Vec::new(),
        });
    };
    let labels = match (c.supervised, labels) {
        (true, None) => {
            return Err(Error::Argument("supervised soft nearest neighbor loss needs labels".into()))
        }
        (_, l) => l,
    };
    let temperature = c.schedule.temperature(epoch);
    let t = T::of(temperature);
    let per_layer: Vec<(usize, SnnlOutput<T>)> = c
        .layers
        .iter()
        .map(|&l| {
            let acts = trace.activations[l].view();
            let out = if c.supervised {
                snnl(acts, labels.unwrap(), t)
            } else {
                snnl_unsupervised(acts, x.view(), t)
            };
            out.map(|o| (l, o))
        })
        .collect::<Result<_>>()?;

    let alpha = T::of(c.alpha);
    let chosen = match c.layer_mode {
        LayerMode::Sum => None,
        LayerMode::Argmin => per_layer
            .iter()
            .min_by(|a, b| a.1.value.partial_cmp(&b.1.value).unwrap_or(std::cmp::Ordering::Equal))
            .map(|(l, _)| *l),
    };
    let mut aggregate = T::zero();
    let mut layer_grads = Vec::new();
    let mut snnl_per_layer = Vec::with_capacity(per_layer.len());
    for (l, out) in per_layer {
        snnl_per_layer.push((l, out.value));
        if chosen.is_none_or(|c| c == l) {
            aggregate = aggregate + out.value;
            layer_grads.push((l, out.grad * alpha));
        }
    }
    Ok(CompositeOutput {
        report: LossReport {
            total: reconstruction + alpha * aggregate,
            reconstruction,
            snnl_per_layer,
            chosen_layer: chosen,
            temperature: Some(temperature),
        },
        output_grad,
        layer_grads,
    })
}
