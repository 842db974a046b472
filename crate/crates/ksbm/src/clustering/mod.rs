//! Block-structure scores, structural community estimation and baselines.

mod agreement;
mod baselines;
mod distance;
mod metrics;
mod sce;

pub use agreement::{agreement, compact_labels};
pub use baselines::{hierarchical_cluster, kmeans_cluster, Linkage};
pub use distance::{distance_matrix, distances_between, representative_vectors, VectorMode};
pub use metrics::{block_clustering, discriminativity, homogeneity, tensor_block_metrics, BlockScore};
pub use sce::{prune, sce, sce_with_distances, CommunityEstimate, SceOptions};
