use alloc::format;
use alloc::vec::Vec;

use crate::{Error, Result};

/// `β_new = β_old + S (β_candidate − β_old)`, clamped to `[lower, upper]`.
pub fn apply_step_damping(old: &[f64], candidate: &[f64], step: f64, lower: &[f64], upper: &[f64]) -> Result<Vec<f64>> {
    if !(step > 0.0 && step <= 1.0) {
        return Err(Error::invalid(format!("step size must be in (0, 1], got {step}")));
    }
    let n = old.len();
    if candidate.len() != n || lower.len() != n || upper.len() != n {
        return Err(Error::invalid("step damping inputs have inconsistent lengths"));
    }
    Ok((0..n)
        .map(|j| {
            let v = if step == 1.0 { candidate[j] } else { old[j] + step * (candidate[j] - old[j]) };
            v.clamp(lower[j], upper[j])
        })
        .collect())
}
