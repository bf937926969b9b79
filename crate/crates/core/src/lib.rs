//! Density-based topology optimization with the normalized field product (nFP)
//! density map.
//!
//! Each element carries a design variable `β`; its physical density is
//!
//! ```text
//! ρ_i = 1 − Π_{j ∈ N_i} f(β_j)^(A_j / A(Γ_i))
//! ```
//!
//! where `N_i` is the element neighborhood, `A_j` the element measure and
//! `A(Γ_i)` the neighborhood measure. The neighborhood embeds a minimum length
//! scale on the solid phase. Densities drive a SIMP stiffness interpolation,
//! and the design is updated with the method of moving asymptotes.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, presets and the
//! command line live in the `nfptop` crate.
//!
//! Module map:
//! - [`mesh`]: structured quad/hex grids and element neighborhoods.
//! - [`density`]: shaping functions, nFP densities and gradients, grayness,
//!   and the Heaviside projection baseline.
//! - [`fem`]: element stiffness, SIMP scaling, assembly and linear solves.
//! - [`objectives`]: compliance, compliant-mechanism objective, volume
//!   constraint and their sensitivities.
//! - [`optimizer`]: MMA, step damping and the optimization driver.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod density;
mod error;
pub mod fem;
mod math;
pub mod mesh;
pub mod objectives;
pub mod optimizer;

pub use error::{Error, Result};
