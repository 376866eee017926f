//! Reconstruction loss, soft nearest neighbor loss and their composite.

mod bce;
mod composite;
mod snnl;
mod temperature;

pub use bce::bce_loss;
pub use composite::{
    composite_loss, CompositeOutput, LayerMode, LossConfig, LossReport, SnnlConfig, DEFAULT_ALPHA,
    DEFAULT_SNNL_LAYERS,
};
pub use snnl::{nearest_neighbors, snnl, snnl_unsupervised, SnnlOutput, NORM_FLOOR};
pub use temperature::{TemperatureSchedule, DEFAULT_ETA, DEFAULT_FIXED_TEMPERATURE, DEFAULT_GAMMA};
