use alloc::format;
use alloc::vec::Vec;

use super::{DensityField, DesignField};
use crate::math::{self, CompensatedSum};
use crate::mesh::NeighborhoodTable;
use crate::{Error, Result};

/// Weighted geometric mean `exp(Σ m_k ln v_k / Σ m_k)`.
pub fn normalized_field_product(values: &[f64], measures: &[f64]) -> Result<f64> {
    if values.len() != measures.len() {
        return Err(Error::invalid(format!("{} values but {} measures", values.len(), measures.len())));
    }
    if values.is_empty() {
        return Err(Error::invalid("field product over an empty partition"));
    }
    let mut num = CompensatedSum::default();
    let mut den = CompensatedSum::default();
    for (k, (&v, &m)) in values.iter().zip(measures).enumerate() {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::domain(format!("value[{k}] = {v} must be positive")));
        }
        if !(m > 0.0 && m.is_finite()) {
            return Err(Error::invalid(format!("measure[{k}] = {m} must be positive")));
        }
        num.add(m * math::ln(v));
        den.add(m);
    }
    Ok(math::exp(num.value() / den.value()))
}

fn check_table(n: usize, table: &NeighborhoodTable) -> Result<()> {
    if table.len() != n {
        return Err(Error::invalid(format!("field has {n} elements but the neighborhood table has {}", table.len())));
    }
    Ok(())
}

/// `ρ_i = 1 − exp(Σ_{j∈N_i} w_ij ln f(β_j))`.
pub fn evaluate_density(design: &DesignField, table: &NeighborhoodTable) -> Result<DensityField> {
    check_table(design.len(), table)?;
    let f = design.shaping();
    let mut ln_f = Vec::with_capacity(design.len());
    for (j, &b) in design.values().iter().enumerate() {
        if !f.contains(b) {
            return Err(Error::domain(format!("beta[{j}] = {b} outside the {} domain", f.name())));
        }
        ln_f.push(f.ln_value(b));
    }
    let rho = (0..table.len())
        .map(|i| {
            let mut s = CompensatedSum::default();
            for (&j, &w) in table.neighbors(i).iter().zip(table.weights(i)) {
                s.add(w * ln_f[j]);
            }
            -libm::expm1(s.value())
        })
        .collect();
    DensityField::new(rho)
}

fn check_consistent(rho: &DensityField, design: &DesignField, table: &NeighborhoodTable) -> Result<()> {
    check_table(design.len(), table)?;
    if rho.len() != design.len() {
        return Err(Error::invalid(format!(
            "density length {} differs from design length {}",
            rho.len(),
            design.len()
        )));
    }
    Ok(())
}

/// Sparse row `j ↦ ∂ρ_i/∂β_j = −(1 − ρ_i) w_ij T2(β_j)` over `j ∈ N_i`.
pub fn density_gradient_row(
    i: usize,
    rho: &DensityField,
    design: &DesignField,
    table: &NeighborhoodTable,
) -> Result<Vec<(usize, f64)>> {
    check_consistent(rho, design, table)?;
    if i >= table.len() {
        return Err(Error::invalid(format!("element {i} out of range")));
    }
    let f = design.shaping();
    let beta = design.values();
    let a = 1.0 - rho.values()[i];
    Ok(table
        .neighbors(i)
        .iter()
        .zip(table.weights(i))
        .map(|(&j, &w)| (j, -(a * w) * f.log_derivative(beta[j])))
        .collect())
}

/// Chain rule through the density map:
/// `(∂f/∂β)_j = Σ_{i : j∈N_i} (∂f/∂ρ)_i ∂ρ_i/∂β_j`.
pub fn backpropagate(
    df_drho: &[f64],
    rho: &DensityField,
    design: &DesignField,
    table: &NeighborhoodTable,
) -> Result<Vec<f64>> {
    check_consistent(rho, design, table)?;
    if df_drho.len() != rho.len() {
        return Err(Error::invalid(format!(
            "sensitivity length {} differs from element count {}",
            df_drho.len(),
            rho.len()
        )));
    }
    let scaled: Vec<f64> = df_drho.iter().zip(rho.values()).map(|(&g, &r)| g * (1.0 - r)).collect();
    let f = design.shaping();
    Ok(design
        .values()
        .iter()
        .enumerate()
        .map(|(j, &b)| {
            let mut s = 0.0;
            for (&i, &w) in table.incident(j).iter().zip(table.incident_weights(j)) {
                s += scaled[i] * w;
            }
            -s * f.log_derivative(b)
        })
        .collect())
}

/// Grayness `g = Σ 4 ρ_i (1 − ρ_i) / n`; zero for binary fields, one at `ρ ≡ 1/2`.
pub fn grayness(rho: &DensityField) -> Result<f64> {
    if rho.is_empty() {
        return Err(Error::invalid("grayness of an empty density field"));
    }
    let mut s = CompensatedSum::default();
    for &r in rho.values() {
        s.add(4.0 * r * (1.0 - r));
    }
    Ok(s.value() / rho.len() as f64)
}
