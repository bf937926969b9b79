//! Envelope (variable-band) Cholesky factorization for symmetric positive
//! definite matrices. Row `i` stores columns `first[i]..=i` contiguously.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::{math, Error, Result};

#[derive(Clone, Debug)]
pub(crate) struct EnvelopeMatrix {
    first: Vec<usize>,
    start: Vec<usize>,
    data: Vec<f64>,
    diag: Vec<f64>,
}

impl EnvelopeMatrix {
    /// Number of stored entries for the given row profile.
    pub(crate) fn storage(first: &[usize]) -> usize {
        first.iter().enumerate().map(|(i, &f)| i - f + 1).sum()
    }

    pub(crate) fn new(first: Vec<usize>) -> Self {
        let mut start = Vec::with_capacity(first.len() + 1);
        let mut acc = 0;
        for (i, &f) in first.iter().enumerate() {
            debug_assert!(f <= i);
            start.push(acc);
            acc += i - f + 1;
        }
        start.push(acc);
        let n = first.len();
        EnvelopeMatrix { first, start, data: vec![0.0; acc], diag: vec![0.0; n] }
    }

    pub(crate) fn len(&self) -> usize {
        self.first.len()
    }

    pub(crate) fn clear(&mut self) {
        self.data.iter_mut().for_each(|v| *v = 0.0);
    }

    /// Adds `v` at `(r, c)` with `r >= c`, which must lie inside the profile.
    #[inline]
    pub(crate) fn add(&mut self, r: usize, c: usize, v: f64) {
        debug_assert!(c <= r && c >= self.first[r]);
        let idx = self.start[r] + (c - self.first[r]);
        self.data[idx] += v;
    }

    /// In-place `A = L Lᵀ`. Fails on a non-positive or non-finite pivot.
    pub(crate) fn factor(&mut self) -> Result<()> {
        let n = self.len();
        for i in 0..n {
            self.diag[i] = self.data[self.start[i + 1] - 1];
        }
        for i in 0..n {
            self.factor_offdiag(i, self.first[i]..i);
            self.factor_pivot(i)?;
        }
        Ok(())
    }

    /// Row `i` entries for columns `cols`, all rows before `i` already final.
    fn factor_offdiag(&mut self, i: usize, cols: core::ops::Range<usize>) {
        let fi = self.first[i];
        let si = self.start[i];
        for j in cols {
            let (fj, sj) = (self.first[j], self.start[j]);
            let k0 = fi.max(fj);
            let s = math::dot(&self.data[si + (k0 - fi)..si + (j - fi)], &self.data[sj + (k0 - fj)..sj + (j - fj)]);
            let idx = si + (j - fi);
            self.data[idx] = (self.data[idx] - s) / self.data[sj + (j - fj)];
        }
    }

    fn factor_pivot(&mut self, i: usize) -> Result<()> {
        let (fi, si) = (self.first[i], self.start[i]);
        let row = &self.data[si..si + (i - fi)];
        let d = self.data[si + (i - fi)] - math::dot(row, row);
        if !(d.is_finite() && d > 1e-14 * self.diag[i].abs()) {
            return Err(Error::numerical(format!(
                "stiffness matrix is not positive definite at equation {i} \
                 (insufficient supports or negative spring)"
            )));
        }
        self.data[si + (i - fi)] = math::sqrt(d);
        Ok(())
    }

    /// Solves `L Lᵀ x = b` in place using the factor.
    pub(crate) fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.len();
        for i in 0..n {
            let fi = self.first[i];
            let si = self.start[i];
            let s = math::dot(&self.data[si..si + (i - fi)], &b[fi..i]);
            b[i] = (b[i] - s) / self.data[si + (i - fi)];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let si = self.start[i];
            b[i] /= self.data[si + (i - fi)];
            let xi = b[i];
            for (k, l) in (fi..i).zip(&self.data[si..si + (i - fi)]) {
                b[k] -= l * xi;
            }
        }
    }
}
