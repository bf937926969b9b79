//! Heaviside projection baseline with a constant weight function:
//! `ρ_i = 1 − exp(−β_H Σ_{j∈N_i} w_ij μ_j)`, where `β_H ≥ 0` is a global
//! sharpness shared by all elements and `μ_j ∈ [0, 1]` are the design
//! variables. The vanishing `e^{−β_H}` correction of the general form is
//! dropped.

use alloc::format;
use alloc::vec::Vec;

use super::DensityField;
use crate::mesh::NeighborhoodTable;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct ProjectionField {
    mu: Vec<f64>,
    sharpness: f64,
}

impl ProjectionField {
    pub fn new(mu: Vec<f64>, sharpness: f64) -> Result<Self> {
        check_sharpness(sharpness)?;
        if let Some(j) = mu.iter().position(|&m| !(0.0..=1.0).contains(&m)) {
            return Err(Error::domain(format!("mu[{j}] = {} outside [0, 1]", mu[j])));
        }
        Ok(ProjectionField { mu, sharpness })
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.mu
    }

    /// Global `β_H`.
    #[inline]
    pub fn sharpness(&self) -> f64 {
        self.sharpness
    }

    pub fn set_sharpness(&mut self, sharpness: f64) -> Result<()> {
        check_sharpness(sharpness)?;
        self.sharpness = sharpness;
        Ok(())
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.mu.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }
}

fn check_sharpness(s: f64) -> Result<()> {
    if !(s >= 0.0 && s.is_finite()) {
        return Err(Error::invalid(format!("projection sharpness must be >= 0, got {s}")));
    }
    Ok(())
}

fn check(n: usize, table: &NeighborhoodTable) -> Result<()> {
    if table.len() != n {
        return Err(Error::invalid(format!("field has {n} elements but the neighborhood table has {}", table.len())));
    }
    Ok(())
}

pub fn projection_density(field: &ProjectionField, table: &NeighborhoodTable) -> Result<DensityField> {
    check(field.len(), table)?;
    let rho = (0..table.len())
        .map(|i| {
            let s: f64 = table.neighbors(i).iter().zip(table.weights(i)).map(|(&j, &w)| w * field.mu[j]).sum();
            -libm::expm1(-field.sharpness * s)
        })
        .collect();
    DensityField::new(rho)
}

/// Sparse row `j ↦ ∂ρ_i/∂μ_j = β_H (1 − ρ_i) w_ij`.
pub fn projection_gradient_row(
    i: usize,
    rho: &DensityField,
    field: &ProjectionField,
    table: &NeighborhoodTable,
) -> Result<Vec<(usize, f64)>> {
    check(field.len(), table)?;
    if rho.len() != field.len() || i >= field.len() {
        return Err(Error::invalid("density/design mismatch or element out of range"));
    }
    let a = 1.0 - rho.values()[i];
    Ok(table.neighbors(i).iter().zip(table.weights(i)).map(|(&j, &w)| (j, (a * w) * field.sharpness)).collect())
}

pub fn projection_backpropagate(
    df_drho: &[f64],
    rho: &DensityField,
    field: &ProjectionField,
    table: &NeighborhoodTable,
) -> Result<Vec<f64>> {
    check(field.len(), table)?;
    if df_drho.len() != rho.len() || rho.len() != field.len() {
        return Err(Error::invalid("sensitivity, density and design lengths differ"));
    }
    let scaled: Vec<f64> = df_drho.iter().zip(rho.values()).map(|(&g, &r)| g * (1.0 - r)).collect();
    Ok((0..field.len())
        .map(|j| {
            let mut s = 0.0;
            for (&i, &w) in table.incident(j).iter().zip(table.incident_weights(j)) {
                s += scaled[i] * w;
            }
            s * field.sharpness
        })
        .collect())
}
