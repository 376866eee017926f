//! Clustering-friendly latent codes.
//!
//! A dense mirror autoencoder is trained with binary cross-entropy plus an
//! α-weighted soft nearest neighbor loss (fixed or annealed temperature).
//! The latent codes are then clustered with k-means++ seeded Lloyd
//! iterations and scored with ACC, NMI, ARI, silhouette, Calinski-Harabasz
//! and Davies-Bouldin.
//!
//! The numeric core (`nn`, `losses`, `cluster`, the geometric metrics) is
//! generic over [`Real`], implemented for `f32` and `f64`. The experiment
//! pipeline runs in `f64`; the aliases below name the common instantiations.

pub mod cluster;
pub mod dataio;
pub mod error;
pub mod experiment;
pub mod losses;
pub mod metrics;
pub mod nn;
pub mod rng;
mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Dataset64 = dataio::Dataset<f64>;
pub type Dataset32 = dataio::Dataset<f32>;
pub type Autoencoder64 = nn::Autoencoder<f64>;
pub type Autoencoder32 = nn::Autoencoder<f32>;
pub type ForwardTrace64 = nn::ForwardTrace<f64>;
pub type AdamState64 = nn::AdamState<f64>;
pub type LossReport64 = losses::LossReport<f64>;
pub type ClusterResult64 = cluster::ClusterResult<f64>;
pub type PcaProjector64 = cluster::PcaProjector<f64>;
