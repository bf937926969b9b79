use alloc::format;
use alloc::vec::Vec;

use super::ShapingFunction;
use crate::mesh::NeighborhoodTable;
use crate::{Error, Result};

/// Per-element design variables `β` with their box bounds.
#[derive(Clone, Debug, PartialEq)]
pub struct DesignField {
    values: Vec<f64>,
    shaping: ShapingFunction,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl DesignField {
    pub fn new(values: Vec<f64>, shaping: ShapingFunction, lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let n = values.len();
        if lower.len() != n || upper.len() != n {
            return Err(Error::invalid(format!(
                "bounds length ({}, {}) differs from design length {n}",
                lower.len(),
                upper.len()
            )));
        }
        for i in 0..n {
            let (l, u) = (lower[i], upper[i]);
            if !(shaping.contains(l) && shaping.contains(u) && l <= u) {
                return Err(Error::domain(format!(
                    "bounds [{l}, {u}] of element {i} are not a finite sub-interval of the {} domain",
                    shaping.name()
                )));
            }
        }
        let mut field = DesignField { values: Vec::new(), shaping, lower, upper };
        field.set_values(values)?;
        Ok(field)
    }

    /// Design with per-element default bounds derived from `|N_i|`.
    pub fn with_default_bounds(values: Vec<f64>, shaping: ShapingFunction, table: &NeighborhoodTable) -> Result<Self> {
        let (lower, upper) = default_bounds(shaping, table);
        Self::new(values, shaping, lower, upper)
    }

    /// Uniform design `β₀` with `1 − f(β₀) = volume_fraction` and default bounds.
    pub fn uniform_for_density(
        volume_fraction: f64,
        shaping: ShapingFunction,
        table: &NeighborhoodTable,
    ) -> Result<Self> {
        if !(volume_fraction > 0.0 && volume_fraction < 1.0) {
            return Err(Error::invalid(format!("volume fraction must lie in (0, 1), got {volume_fraction}")));
        }
        let b0 = shaping.uniform_for_density(volume_fraction);
        let (lower, upper) = default_bounds(shaping, table);
        let values = (0..table.len()).map(|i| b0.clamp(lower[i], upper[i])).collect();
        Self::new(values, shaping, lower, upper)
    }

    /// Replaces the values; every entry must lie inside its bounds.
    pub fn set_values(&mut self, values: Vec<f64>) -> Result<()> {
        if values.len() != self.lower.len() {
            return Err(Error::invalid(format!(
                "design length {} differs from bounds length {}",
                values.len(),
                self.lower.len()
            )));
        }
        if let Some(i) = (0..values.len()).find(|&i| !(values[i] >= self.lower[i] && values[i] <= self.upper[i])) {
            return Err(Error::domain(format!(
                "beta[{i}] = {} outside [{}, {}]",
                values[i], self.lower[i], self.upper[i]
            )));
        }
        self.values = values;
        Ok(())
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    #[inline]
    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    #[inline]
    pub fn shaping(&self) -> ShapingFunction {
        self.shaping
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn default_bounds(shaping: ShapingFunction, table: &NeighborhoodTable) -> (Vec<f64>, Vec<f64>) {
    (0..table.len()).map(|i| shaping.default_bounds(table.size(i))).unzip()
}

/// Physical element densities `ρ ∈ [0, 1]`.
///
/// Fields produced by the nFP map satisfy `ρ < 1` strictly; hand-built
/// fields may contain exact ones.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityField {
    values: Vec<f64>,
}

impl DensityField {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|&r| !(0.0..=1.0).contains(&r)) {
            return Err(Error::domain(format!("rho[{i}] = {} outside [0, 1]", values[i])));
        }
        Ok(DensityField { values })
    }

    pub fn uniform(n: usize, rho: f64) -> Result<Self> {
        Self::new(alloc::vec![rho; n])
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}
