//! Reductions of structured problems to constrained BQPs.

pub mod clustering;
pub mod decode;
pub mod matching;
pub mod mrf;

pub use clustering::{build_clustering, clustering_params, kmeans, ClusteringInstance};
pub use decode::{decode_solution, encode_solution, Decoded, ProblemKind};
pub use matching::{build_matching, spectral_matching, MatchingInstance};
pub use mrf::{build_mrf, grid_similarity, laplacian, MrfInstance, Neighbourhood};
