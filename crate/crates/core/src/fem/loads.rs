use alloc::format;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Supports, point loads, grounded springs and the optional dummy load of a
/// single analysis. DOF indices are global mesh DOFs.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LoadCase {
    fixed: Vec<usize>,
    loads: Vec<(usize, f64)>,
    springs: Vec<(usize, f64)>,
    dummy: Vec<(usize, f64)>,
}

fn accumulate(list: &mut Vec<(usize, f64)>, dof: usize, value: f64) {
    match list.iter_mut().find(|(d, _)| *d == dof) {
        Some(entry) => entry.1 += value,
        None => list.push((dof, value)),
    }
}

impl LoadCase {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn fix(&mut self, dof: usize) -> &mut Self {
        if !self.fixed.contains(&dof) {
            self.fixed.push(dof);
        }
        self
    }

    pub fn fix_all(&mut self, dofs: impl IntoIterator<Item = usize>) -> &mut Self {
        for d in dofs {
            self.fix(d);
        }
        self
    }

    /// Adds a point load; repeated calls on one DOF accumulate.
    pub fn load(&mut self, dof: usize, magnitude: f64) -> &mut Self {
        accumulate(&mut self.loads, dof, magnitude);
        self
    }

    /// Adds a grounded spring; repeated calls on one DOF act in parallel.
    pub fn spring(&mut self, dof: usize, stiffness: f64) -> &mut Self {
        accumulate(&mut self.springs, dof, stiffness);
        self
    }

    pub fn dummy_load(&mut self, dof: usize, magnitude: f64) -> &mut Self {
        accumulate(&mut self.dummy, dof, magnitude);
        self
    }

    pub fn fixed(&self) -> &[usize] {
        &self.fixed
    }

    pub fn loads(&self) -> &[(usize, f64)] {
        &self.loads
    }

    pub fn springs(&self) -> &[(usize, f64)] {
        &self.springs
    }

    pub fn dummy_loads(&self) -> &[(usize, f64)] {
        &self.dummy
    }

    pub fn has_dummy(&self) -> bool {
        !self.dummy.is_empty()
    }

    /// Checks every DOF against `dof_count` and every value for finiteness.
    pub fn validate(&self, dof_count: usize) -> Result<()> {
        if let Some(d) = self.fixed.iter().find(|&&d| d >= dof_count) {
            return Err(Error::invalid(format!("fixed DOF {d} out of range (mesh has {dof_count})")));
        }
        for (what, list) in [("load", &self.loads), ("spring", &self.springs), ("dummy load", &self.dummy)] {
            for &(d, v) in list.iter() {
                if d >= dof_count {
                    return Err(Error::invalid(format!("{what} DOF {d} out of range (mesh has {dof_count})")));
                }
                if !v.is_finite() {
                    return Err(Error::invalid(format!("{what} at DOF {d} is not finite")));
                }
            }
        }
        if let Some((d, k)) = self.springs.iter().find(|(_, k)| *k < 0.0) {
            return Err(Error::invalid(format!("negative spring stiffness {k} at DOF {d}")));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accumulates_and_validates() {
        let mut lc = LoadCase::new();
        lc.fix(0).fix(0).fix_all([1, 2]).load(5, 1.0).load(5, 0.5).spring(7, 100.0);
        assert_eq!(lc.fixed(), &[0, 1, 2]);
        assert_eq!(lc.loads(), &[(5, 1.5)]);
        assert!(lc.validate(8).is_ok());
        assert!(lc.validate(7).is_err());
        lc.spring(3, -200.0);
        assert!(lc.validate(8).is_err());
    }
}
