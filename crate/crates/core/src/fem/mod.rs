//! Small-strain linear elasticity on structured grids.
//!
//! 2D uses 4-node bilinear quads in plane stress with unit thickness, 3D uses
//! 8-node trilinear hexes. Element stiffness is scaled by the SIMP law
//! `ρ^η (1 − ρ_min) + ρ_min`.

mod cg;
mod element;
mod envelope;
mod loads;
mod material;
mod system;

pub use element::{element_stiffness, ElementMatrix};
pub use loads::LoadCase;
pub use material::MaterialModel;
pub use system::{
    assemble_and_solve, element_strain_energy_terms, EnergyTerms, SolverKind, StiffnessSystem, SystemState,
};
