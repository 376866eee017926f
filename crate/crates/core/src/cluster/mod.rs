//! k-means (k-means++ seeding, nine-run restart protocol) and the PCA
//! projector used for the raw-feature baseline.

mod kmeans;
mod pca;

pub use kmeans::{
    kmeans, kmeans_pp_indices, kmeans_pp_seed, nine_run_protocol, reporting_run, ClusterResult,
    DEFAULT_TOLERANCE, PROTOCOL_ITER_STEP, PROTOCOL_RUNS,
};
pub use pca::{pca_fit, symmetric_eigen, PcaProjector};
