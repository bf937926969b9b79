use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::math::dot;
use crate::{Error, Result};

/// Jacobi-preconditioned conjugate gradients for `A x = b`, with `A` applied
/// through `apply(x, y)` writing `y = A x`. Converges when
/// `‖r‖ ≤ tol ‖b‖`.
pub(crate) fn pcg(
    mut apply: impl FnMut(&[f64], &mut [f64]),
    diag: &[f64],
    b: &[f64],
    x0: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
) -> Result<Vec<f64>> {
    let n = b.len();
    let bnorm = crate::math::sqrt(dot(b, b));
    let mut x = match x0 {
        Some(x0) => x0.to_vec(),
        None => vec![0.0; n],
    };
    if bnorm == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let inv: Vec<f64> = diag.iter().map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 }).collect();
    let mut q = vec![0.0; n];
    apply(&x, &mut q);
    let mut r: Vec<f64> = b.iter().zip(&q).map(|(b, q)| b - q).collect();
    let mut z: Vec<f64> = r.iter().zip(&inv).map(|(r, m)| r * m).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for _ in 0..max_iter {
        if crate::math::sqrt(dot(&r, &r)) <= tol * bnorm {
            return Ok(x);
        }
        apply(&p, &mut q);
        let pq = dot(&p, &q);
        if !(pq > 0.0) {
            return Err(Error::numerical(
                "conjugate gradients hit a non-positive curvature (insufficient supports or negative spring)",
            ));
        }
        let alpha = rz / pq;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
            z[i] = r[i] * inv[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let rel = crate::math::sqrt(dot(&r, &r)) / bnorm;
    if rel <= tol {
        Ok(x)
    } else {
        Err(Error::numerical(format!("conjugate gradients did not converge: relative residual {rel:.3e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_tridiagonal() {
        let n = 50;
        let apply = |x: &[f64], y: &mut [f64]| {
            for i in 0..n {
                let mut s = 4.0 * x[i];
                if i > 0 {
                    s -= x[i - 1];
                }
                if i + 1 < n {
                    s -= x[i + 1];
                }
                y[i] = s;
            }
        };
        let b = vec![1.0; n];
        let x = pcg(apply, &vec![4.0; n], &b, None, 1e-12, 200).unwrap();
        let mut y = vec![0.0; n];
        apply(&x, &mut y);
        assert!(y.iter().all(|v| (v - 1.0).abs() < 1e-10));
    }
}
