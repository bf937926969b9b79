use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::math::sqrt;
use crate::{Error, Result};

const RAA0: f64 = 1e-5;
const DUAL_TOL: f64 = 1e-10;
const DUAL_MAX_LAMBDA: f64 = 1e40;

/// Asymptote and move-limit parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MmaSettings {
    asy_init: f64,
    asy_incr: f64,
    asy_decr: f64,
    move_limit: f64,
}

impl Default for MmaSettings {
    fn default() -> Self {
        MmaSettings { asy_init: 0.5, asy_incr: 1.2, asy_decr: 0.7, move_limit: 0.5 }
    }
}

impl MmaSettings {
    pub fn new(asy_init: f64, asy_incr: f64, asy_decr: f64, move_limit: f64) -> Result<Self> {
        if !(asy_init > 0.0 && asy_init <= 1.0) {
            return Err(Error::invalid(format!("asymptote init must be in (0, 1], got {asy_init}")));
        }
        if !(asy_incr >= 1.0 && asy_incr.is_finite()) {
            return Err(Error::invalid(format!("asymptote increase must be >= 1, got {asy_incr}")));
        }
        if !(asy_decr > 0.0 && asy_decr <= 1.0) {
            return Err(Error::invalid(format!("asymptote decrease must be in (0, 1], got {asy_decr}")));
        }
        if !(move_limit > 0.0 && move_limit <= 1.0) {
            return Err(Error::invalid(format!("move limit must be in (0, 1], got {move_limit}")));
        }
        Ok(MmaSettings { asy_init, asy_incr, asy_decr, move_limit })
    }

    pub fn asy_init(&self) -> f64 {
        self.asy_init
    }

    pub fn asy_incr(&self) -> f64 {
        self.asy_incr
    }

    pub fn asy_decr(&self) -> f64 {
        self.asy_decr
    }

    pub fn move_limit(&self) -> f64 {
        self.move_limit
    }
}

/// Moving-asymptote optimizer for one inequality constraint `g₁ ≤ 0`.
///
/// Each call to [`MmaState::step`] treats its `x` as the accepted iterate and
/// shifts it into the history used for asymptote adaptation.
#[derive(Clone, Debug)]
pub struct MmaState {
    settings: MmaSettings,
    iteration: usize,
    low: Vec<f64>,
    upp: Vec<f64>,
    xold1: Vec<f64>,
    xold2: Vec<f64>,
}

impl MmaState {
    pub fn new(n: usize, settings: MmaSettings) -> Self {
        MmaState { settings, iteration: 0, low: vec![0.0; n], upp: vec![0.0; n], xold1: Vec::new(), xold2: Vec::new() }
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn lower_asymptotes(&self) -> &[f64] {
        &self.low
    }

    pub fn upper_asymptotes(&self) -> &[f64] {
        &self.upp
    }

    /// Solves the convex separable subproblem around `x` and returns the
    /// candidate point. `f0` is accepted for interface symmetry; the
    /// subproblem minimizer does not depend on it.
    #[allow(clippy::too_many_arguments)]
    pub fn step(
        &mut self,
        x: &[f64],
        _f0: f64,
        df0: &[f64],
        g1: f64,
        dg1: &[f64],
        xmin: &[f64],
        xmax: &[f64],
    ) -> Result<Vec<f64>> {
        let n = x.len();
        if [df0.len(), dg1.len(), xmin.len(), xmax.len(), self.low.len()].iter().any(|&l| l != n) {
            return Err(Error::invalid("MMA inputs have inconsistent lengths"));
        }
        if let Some(j) = df0.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("objective gradient is not finite at {j}")));
        }
        if let Some(j) = dg1.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("constraint gradient is not finite at {j}")));
        }
        if !g1.is_finite() {
            return Err(Error::invalid("constraint value is not finite"));
        }
        for j in 0..n {
            if !(xmin[j] <= x[j] && x[j] <= xmax[j]) {
                return Err(Error::invalid(format!("x[{j}] = {} outside [{}, {}]", x[j], xmin[j], xmax[j])));
            }
        }

        let s = self.settings;
        let range: Vec<f64> = (0..n).map(|j| (xmax[j] - xmin[j]).max(1e-12)).collect();
        if self.iteration < 2 {
            for j in 0..n {
                self.low[j] = x[j] - s.asy_init * range[j];
                self.upp[j] = x[j] + s.asy_init * range[j];
            }
        } else {
            for j in 0..n {
                let z = (x[j] - self.xold1[j]) * (self.xold1[j] - self.xold2[j]);
                let factor = if z > 0.0 {
                    s.asy_incr
                } else if z < 0.0 {
                    s.asy_decr
                } else {
                    1.0
                };
                let low = x[j] - factor * (self.xold1[j] - self.low[j]);
                let upp = x[j] + factor * (self.upp[j] - self.xold1[j]);
                self.low[j] = low.clamp(x[j] - 10.0 * range[j], x[j] - 0.01 * range[j]);
                self.upp[j] = upp.clamp(x[j] + 0.01 * range[j], x[j] + 10.0 * range[j]);
            }
        }

        let mut alpha = vec![0.0; n];
        let mut beta = vec![0.0; n];
        let mut p0 = vec![0.0; n];
        let mut q0 = vec![0.0; n];
        let mut p1 = vec![0.0; n];
        let mut q1 = vec![0.0; n];
        let mut r1 = g1;
        for j in 0..n {
            let (l, u, xj) = (self.low[j], self.upp[j], x[j]);
            alpha[j] = xmin[j].max(l + 0.1 * (xj - l)).max(xj - s.move_limit * range[j]);
            beta[j] = xmax[j].min(u - 0.1 * (u - xj)).min(xj + s.move_limit * range[j]);
            let (ux2, xl2) = ((u - xj) * (u - xj), (xj - l) * (xj - l));
            let reg = RAA0 / range[j];
            let (dp, dm) = (df0[j].max(0.0), (-df0[j]).max(0.0));
            p0[j] = ux2 * (1.001 * dp + 0.001 * dm + reg);
            q0[j] = xl2 * (0.001 * dp + 1.001 * dm + reg);
            let (dp, dm) = (dg1[j].max(0.0), (-dg1[j]).max(0.0));
            p1[j] = ux2 * (1.001 * dp + 0.001 * dm + reg);
            q1[j] = xl2 * (0.001 * dp + 1.001 * dm + reg);
            r1 -= p1[j] / (u - xj) + q1[j] / (xj - l);
        }

        let (low, upp) = (&self.low, &self.upp);
        let solve = |lambda: f64, out: &mut [f64]| -> f64 {
            let mut g = r1;
            for j in 0..n {
                let sp = sqrt(p0[j] + lambda * p1[j]);
                let sq = sqrt(q0[j] + lambda * q1[j]);
                let xj = ((low[j] * sp + upp[j] * sq) / (sp + sq)).clamp(alpha[j], beta[j]);
                out[j] = xj;
                g += p1[j] / (upp[j] - xj) + q1[j] / (xj - low[j]);
            }
            g
        };

        let mut cand = vec![0.0; n];
        if solve(0.0, &mut cand) > 0.0 {
            let mut lo = 0.0;
            let mut hi = 1.0;
            while solve(hi, &mut cand) > 0.0 {
                lo = hi;
                hi *= 2.0;
                if hi > DUAL_MAX_LAMBDA {
                    break;
                }
            }
            if hi <= DUAL_MAX_LAMBDA {
                let mut converged = false;
                for _ in 0..400 {
                    if hi - lo <= DUAL_TOL * hi {
                        converged = true;
                        break;
                    }
                    let mid = 0.5 * (lo + hi);
                    if solve(mid, &mut cand) > 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                if !converged {
                    return Err(Error::numerical("MMA dual bisection did not converge"));
                }
                solve(hi, &mut cand);
            }
            // Otherwise the subproblem is infeasible inside the move limits and
            // `cand` holds the most feasible point.
        }

        self.xold2 = core::mem::take(&mut self.xold1);
        self.xold1 = x.to_vec();
        self.iteration += 1;
        Ok(cand)
    }
}
