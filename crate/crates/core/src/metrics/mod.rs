//! Clustering evaluation: ACC, NMI, ARI against ground truth, and
//! silhouette, Calinski-Harabasz, Davies-Bouldin on the embedding geometry.

mod contingency;
mod external;
mod hungarian;
mod internal;
mod report;

pub use contingency::{compact_ids, ContingencyTable};
pub use external::{ari, clustering_accuracy, nmi};
pub use hungarian::max_weight_matching;
pub use internal::{
    calinski_harabasz, davies_bouldin, silhouette, silhouette_sampled, SilhouetteSampling,
    SilhouetteScore,
};
pub use report::{evaluate, MetricScores, MetricsReport, METRIC_NAMES};
