//! Dense kernels: symmetric eigendecomposition, least squares, k-means.

mod eigen;
mod kmeans;
mod lstsq;
mod matrix;

pub use eigen::{symmetric_eigen, EigenPairs};
pub use kmeans::{kmeans, KMeansResult};
pub use lstsq::{solve_normal_equations, ConditionFlag, LeastSquaresSolution, CONDITION_LIMIT};
pub use matrix::{Matrix, SymMatrix};
