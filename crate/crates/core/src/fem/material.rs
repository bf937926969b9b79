use alloc::format;

use crate::math;
use crate::{Error, Result};

/// Isotropic linear-elastic solid with SIMP interpolation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MaterialModel {
    youngs_modulus: f64,
    poisson_ratio: f64,
    penalty: f64,
    rho_min: f64,
}

impl Default for MaterialModel {
    fn default() -> Self {
        MaterialModel { youngs_modulus: 2e4, poisson_ratio: 0.3, penalty: 3.0, rho_min: 1e-4 }
    }
}

impl MaterialModel {
    pub fn new(youngs_modulus: f64, poisson_ratio: f64, penalty: f64, rho_min: f64) -> Result<Self> {
        if !(youngs_modulus > 0.0 && youngs_modulus.is_finite()) {
            return Err(Error::invalid(format!("Young's modulus must be > 0, got {youngs_modulus}")));
        }
        if !(0.0..0.5).contains(&poisson_ratio) {
            return Err(Error::invalid(format!("Poisson ratio must be in [0, 0.5), got {poisson_ratio}")));
        }
        if !(penalty >= 1.0 && penalty.is_finite()) {
            return Err(Error::invalid(format!("SIMP penalty must be >= 1, got {penalty}")));
        }
        if !(rho_min > 0.0 && rho_min < 1.0) {
            return Err(Error::invalid(format!("rho_min must be in (0, 1), got {rho_min}")));
        }
        Ok(MaterialModel { youngs_modulus, poisson_ratio, penalty, rho_min })
    }

    #[inline]
    pub fn youngs_modulus(&self) -> f64 {
        self.youngs_modulus
    }

    #[inline]
    pub fn poisson_ratio(&self) -> f64 {
        self.poisson_ratio
    }

    #[inline]
    pub fn penalty(&self) -> f64 {
        self.penalty
    }

    #[inline]
    pub fn rho_min(&self) -> f64 {
        self.rho_min
    }

    /// Stiffness multiplier `ρ^η (1 − ρ_min) + ρ_min`.
    #[inline]
    pub fn simp_scale(&self, rho: f64) -> f64 {
        math::powf(rho, self.penalty) * (1.0 - self.rho_min) + self.rho_min
    }

    /// `d(simp_scale)/dρ = η (1 − ρ_min) ρ^(η−1)`.
    #[inline]
    pub fn simp_derivative(&self, rho: f64) -> f64 {
        self.penalty * (1.0 - self.rho_min) * math::powf(rho, self.penalty - 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simp_examples() {
        let m = MaterialModel::default();
        assert_eq!(m.simp_scale(1.0), 1.0);
        assert_eq!(m.simp_scale(0.0), 1e-4);
        assert!((m.simp_scale(0.5) - 0.1250875).abs() < 1e-15);
    }

    #[test]
    fn simp_derivative_matches_difference() {
        let m = MaterialModel::default();
        let h = 1e-6;
        for r in [0.1, 0.4, 0.9] {
            let fd = (m.simp_scale(r + h) - m.simp_scale(r - h)) / (2.0 * h);
            assert!((fd - m.simp_derivative(r)).abs() < 1e-8);
        }
    }

    #[test]
    fn validation() {
        assert!(MaterialModel::new(0.0, 0.3, 3.0, 1e-4).is_err());
        assert!(MaterialModel::new(1.0, 0.5, 3.0, 1e-4).is_err());
        assert!(MaterialModel::new(1.0, 0.3, 0.5, 1e-4).is_err());
        assert!(MaterialModel::new(1.0, 0.3, 3.0, 0.0).is_err());
        assert!(MaterialModel::new(1.0, 0.0, 1.0, 1e-9).is_ok());
    }
}
