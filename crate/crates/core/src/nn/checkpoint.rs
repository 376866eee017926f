//! Model checkpoints: `DSCK` magic, u32 format version, u32 header length,
//! a JSON header (dims, activations, latent index, seed, epoch), then every
//! layer's weights (row-major) followed by its biases as little-endian f64.

use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::{Activation, Autoencoder, Dense};
use crate::error::{Error, Result};
use crate::Real;

const MAGIC: &[u8; 4] = b"DSCK";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint<T> {
    pub model: Autoencoder<T>,
    pub seed: u64,
    /// Epochs completed when the checkpoint was written.
    pub epoch: usize,
}

#[derive(Serialize, Deserialize)]
struct Header {
    dims: Vec<usize>,
    activations: Vec<Activation>,
    latent_index: usize,
    seed: u64,
    epoch: usize,
}

impl<T: Real> Checkpoint<T> {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let layers = &self.model.layers;
        let mut dims = vec![self.model.input_dim()];
        dims.extend(layers.iter().map(|l| l.out_dim()));
        let header = serde_json::to_vec(&Header {
            dims,
            activations: layers.iter().map(|l| l.activation).collect(),
            latent_index: self.model.latent_index,
            seed: self.seed,
            epoch: self.epoch,
        })?;
        let mut out = Vec::with_capacity(12 + header.len() + 8 * self.model.num_params());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(header.len() as u32).to_le_bytes());
        out.extend_from_slice(&header);
        for l in layers {
            for v in l.weights.iter().chain(l.bias.iter()) {
                out.extend_from_slice(&v.as_f64().to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |r: &str| Error::format("checkpoint", r.to_string());
        if bytes.len() < 12 || &bytes[..4] != MAGIC {
            return Err(bad("missing DSCK header"));
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
        if version != VERSION {
            return Err(bad(&format!("unsupported version {version}")));
        }
        let hlen = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        let header: Header = serde_json::from_slice(
            bytes.get(12..12 + hlen).ok_or_else(|| bad("truncated header"))?,
        )?;
        if header.dims.len() != header.activations.len() + 1
            || header.latent_index == 0
            || header.latent_index >= header.dims.len()
        {
            return Err(bad("inconsistent layer table"));
        }
        let mut values = bytes[12 + hlen..]
            .chunks_exact(8)
            .map(|c| T::of(f64::from_le_bytes(c.try_into().unwrap())));
        let expected: usize = header.dims.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
        if bytes.len() - 12 - hlen != expected * 8 {
            return Err(bad(&format!("expected {expected} parameters")));
        }
        let layers = header
            .dims
            .windows(2)
            .zip(&header.activations)
            .map(|(w, &activation)| {
                let weights = Array2::from_shape_simple_fn((w[1], w[0]), || values.next().unwrap());
                let bias = Array1::from_shape_simple_fn(w[1], || values.next().unwrap());
                Dense {
                    weights,
                    bias,
                    activation,
                }
            })
            .collect();
        Ok(Checkpoint {
            model: Autoencoder {
                layers,
                latent_index: header.latent_index,
            },
            seed: header.seed,
            epoch: header.epoch,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}
