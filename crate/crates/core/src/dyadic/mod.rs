//! Dyadic meshes on the periodic unit cube, cube combinatorics and sparse collections.

pub mod appendix;
pub mod grid;
pub mod mesh;
pub mod sparse;

pub use appendix::{sparse_operator, sparse_renormalize, weak_decomposition, Renormalized, WeakDecomposition};
pub use grid::{average, cz_stopping_cubes, GridFunction, Pyramid};
pub use mesh::{DyadicCube, Mesh};
pub use sparse::{is_sparse, is_sparse_by_flow, SparseCollection};
