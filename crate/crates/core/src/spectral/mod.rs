//! Spectral clustering of observable customer profiles.
//!
//! Profiles become vertices of a locally scaled Gaussian similarity graph;
//! the top eigenvectors of the normalized affinity give an embedding that
//! k-means labels. The cluster count is calibrated from the knee of the
//! modified Hubert Γ curve.

mod graph;
mod hubert;
mod profiles;
mod select;

pub use graph::{
    build_similarity_graph, build_similarity_graph_with_rank, normalized_affinity, spectral_embed,
    SimilarityGraph, DEFAULT_NEIGHBOR_RANK, SCALE_FLOOR,
};
pub use hubert::{hubert_gamma, knee};
pub use profiles::{demand_profiles, solar_profiles};
pub use select::{
    cluster_fixed, debug_dump, identity_clustering, select_cluster_count,
    select_cluster_count_with, ClusteringResult, SpectralConfig, SpectralDump,
};
