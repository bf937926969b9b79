//! Density evaluation: design variables `β` to physical densities `ρ`.
//!
//! All neighborhood products are evaluated in log space,
//! `ρ_i = 1 − exp(Σ_j w_ij ln f(β_j))`, so large neighborhoods never
//! underflow.

mod field;
mod nfp;
mod projection;
mod shaping;

pub use field::{DensityField, DesignField};
pub use nfp::{backpropagate, density_gradient_row, evaluate_density, grayness, normalized_field_product};
pub use projection::{projection_backpropagate, projection_density, projection_gradient_row, ProjectionField};
pub use shaping::ShapingFunction;
