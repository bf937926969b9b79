//! Structured grids and element neighborhoods.
//!
//! Elements and nodes are numbered lexicographically with `x` varying
//! fastest, then `y`, then `z`. Node `n` owns DOFs `dim*n .. dim*n + dim`.

mod grid;
mod neighborhood;

pub use grid::{build_grid, Dim, GridMesh};
pub use neighborhood::{build_neighborhoods, NeighborhoodShape, NeighborhoodTable};
