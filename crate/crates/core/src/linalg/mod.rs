//! Sparse matrices, direct solvers and spectral estimates.

pub mod eigen;
pub mod factor;
pub mod ordering;
pub mod sparse;
pub mod vector;

pub use eigen::{extremal_eigenvalues, extremal_singular_values};
pub use factor::{solve_general, solve_spd, Factorization};
pub use sparse::SparseMatrix;
