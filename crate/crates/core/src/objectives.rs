//! Objectives, the volume constraint, and their sensitivities with respect
//! to element densities.
//!
//! Both objectives are self-adjoint, so sensitivities are element-local
//! quadratic forms of the cached solutions. Chain them into design space with
//! [`crate::density::backpropagate`].

use alloc::format;
use alloc::vec::Vec;

use crate::density::DensityField;
use crate::fem::{StiffnessSystem, SystemState};
use crate::mesh::GridMesh;
use crate::{Error, Result};

/// Default scale for compliance minimization.
pub const DEFAULT_STIFF_SCALE: f64 = 1e3;
/// Default scale for compliant mechanisms.
pub const DEFAULT_COMPLIANT_SCALE: f64 = 1e5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ObjectiveKind {
    /// `μ · ½ uᵀKu`.
    Stiff,
    /// `−μ · vᵀKu / uᵀKu`.
    Compliant,
}

impl ObjectiveKind {
    pub fn default_scale(self) -> f64 {
        match self {
            ObjectiveKind::Stiff => DEFAULT_STIFF_SCALE,
            ObjectiveKind::Compliant => DEFAULT_COMPLIANT_SCALE,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ObjectiveSpec {
    kind: ObjectiveKind,
    scale: f64,
    volume_fraction: f64,
}

impl ObjectiveSpec {
    pub fn new(kind: ObjectiveKind, scale: f64, volume_fraction: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::invalid(format!("objective scale must be > 0, got {scale}")));
        }
        if !(volume_fraction > 0.0 && volume_fraction < 1.0) {
            return Err(Error::invalid(format!("volume fraction must be in (0, 1), got {volume_fraction}")));
        }
        Ok(ObjectiveSpec { kind, scale, volume_fraction })
    }

    /// Spec with the default scale for `kind`.
    pub fn with_default_scale(kind: ObjectiveKind, volume_fraction: f64) -> Result<Self> {
        Self::new(kind, kind.default_scale(), volume_fraction)
    }

    pub fn kind(&self) -> ObjectiveKind {
        self.kind
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn volume_fraction(&self) -> f64 {
        self.volume_fraction
    }

    /// `V* = v_f · Σ V_i`.
    pub fn permitted_volume(&self, mesh: &GridMesh) -> f64 {
        self.volume_fraction * mesh.total_measure()
    }
}

fn check_state(system: &StiffnessSystem, state: &SystemState, rho: &DensityField) -> Result<()> {
    let ne = system.mesh().element_count();
    if rho.len() != ne || state.scales().len() != ne || state.u().len() != system.mesh().dof_count() {
        return Err(Error::Precondition(format!(
            "state does not belong to this system ({} densities, {} elements)",
            rho.len(),
            ne
        )));
    }
    Ok(())
}

/// `f₀ = μ · ½ uᵀKu` and `∂f₀/∂ρ_i = −μ · ½ s'(ρ_i) · u_eᵀK₀u_e`.
pub fn stiff_objective_and_sens(
    system: &StiffnessSystem,
    state: &SystemState,
    rho: &DensityField,
    spec: &ObjectiveSpec,
) -> Result<(f64, Vec<f64>)> {
    check_state(system, state, rho)?;
    let mu = spec.scale;
    let (uku, _) = system.global_energies(state);
    let terms = system.energy_terms(state);
    let mat = system.material();
    let sens = rho.values().iter().zip(&terms.uu).map(|(&r, &t)| -mu * 0.5 * mat.simp_derivative(r) * t).collect();
    Ok((mu * 0.5 * uku, sens))
}

/// `f₀ = −μ vᵀKu / uᵀKu` with springs included in `K`.
pub fn cm_objective_and_sens(
    system: &StiffnessSystem,
    state: &SystemState,
    rho: &DensityField,
    spec: &ObjectiveSpec,
) -> Result<(f64, Vec<f64>)> {
    check_state(system, state, rho)?;
    if state.v().is_none() {
        return Err(Error::Precondition("compliant objective needs a dummy-load solution".into()));
    }
    let (uku, vku) = system.global_energies(state);
    let vku = vku.unwrap_or(0.0);
    if !(uku > 0.0 && uku.is_finite()) {
        return Err(Error::numerical(format!("degenerate state: uᵀKu = {uku}")));
    }
    let mu = spec.scale;
    let terms = system.energy_terms(state);
    let uv = terms.uv.as_deref().unwrap_or(&[]);
    let mat = system.material();
    let ratio = vku / (uku * uku);
    let sens = rho
        .values()
        .iter()
        .zip(terms.uu.iter().zip(uv))
        .map(|(&r, (&tuu, &tuv))| {
            let ds = mat.simp_derivative(r);
            mu * (ratio * (-ds * tuu) + ds * tuv / uku)
        })
        .collect();
    Ok((-mu * vku / uku, sens))
}

/// Dispatches on `spec.kind()`.
pub fn objective_and_sens(
    system: &StiffnessSystem,
    state: &SystemState,
    rho: &DensityField,
    spec: &ObjectiveSpec,
) -> Result<(f64, Vec<f64>)> {
    match spec.kind {
        ObjectiveKind::Stiff => stiff_objective_and_sens(system, state, rho, spec),
        ObjectiveKind::Compliant => cm_objective_and_sens(system, state, rho, spec),
    }
}

/// `g₁ = Σ ρ_i V_i / V* − 1` and `∂g₁/∂ρ_i = V_i / V*`.
pub fn volume_constraint_and_sens(
    rho: &DensityField,
    mesh: &GridMesh,
    spec: &ObjectiveSpec,
) -> Result<(f64, Vec<f64>)> {
    if rho.len() != mesh.element_count() {
        return Err(Error::invalid(format!(
            "density has {} entries, mesh has {} elements",
            rho.len(),
            mesh.element_count()
        )));
    }
    let vstar = spec.permitted_volume(mesh);
    let mut used = crate::math::CompensatedSum::default();
    for (r, v) in rho.values().iter().zip(mesh.measures()) {
        used.add(r * v);
    }
    let sens = mesh.measures().iter().map(|v| v / vstar).collect();
    Ok((used.value() / vstar - 1.0, sens))
}
