use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::cg::pcg;
use super::envelope::EnvelopeMatrix;
use super::{element_stiffness, ElementMatrix, LoadCase, MaterialModel};
use crate::density::DensityField;
use crate::math::{dot, sqrt, CompensatedSum};
use crate::mesh::GridMesh;
use crate::{Error, Result};

const FIXED: usize = usize::MAX;
const RESIDUAL_TOL: f64 = 1e-9;
const CG_TOL: f64 = 1e-10;
const REFINE_STEPS: usize = 2;
const ACCURATE_REFINE_STEPS: usize = 4;
/// Envelope size above which `Auto` switches to conjugate gradients.
const DIRECT_LIMIT: usize = 60_000_000;

/// Linear solver selection.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum SolverKind {
    /// Direct factorization unless the envelope would be too large.
    #[default]
    Auto,
    Direct,
    ConjugateGradient,
}

#[derive(Clone, Debug)]
enum Backend {
    Direct(EnvelopeMatrix),
    Iterative,
}

/// Displacements for the real load and, when present, the dummy load.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemState {
    u: Vec<f64>,
    v: Option<Vec<f64>>,
    scales: Vec<f64>,
}

impl SystemState {
    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn v(&self) -> Option<&[f64]> {
        self.v.as_deref()
    }

    /// Per-element SIMP multipliers the system was assembled with.
    pub fn scales(&self) -> &[f64] {
        &self.scales
    }
}

/// Per-element quadratic forms `u_eᵀK₀u_e` and `u_eᵀK₀v_e`.
#[derive(Clone, Debug, PartialEq)]
pub struct EnergyTerms {
    pub uu: Vec<f64>,
    pub uv: Option<Vec<f64>>,
}

/// Assembled-on-demand global stiffness for a fixed mesh, material and load
/// case. Ordering, profile and the element matrix are computed once.
#[derive(Clone, Debug)]
pub struct StiffnessSystem {
    mesh: GridMesh,
    material: MaterialModel,
    loads: LoadCase,
    k0: ElementMatrix,
    /// Global DOF to equation index, `FIXED` for constrained DOFs.
    equation: Vec<usize>,
    /// Equation index of each local DOF, flattened per element.
    element_eqs: Vec<usize>,
    free_count: usize,
    springs: Vec<(usize, f64)>,
    f: Vec<f64>,
    fd: Option<Vec<f64>>,
    backend: Backend,
    warm: Option<(Vec<f64>, Option<Vec<f64>>)>,
}

impl StiffnessSystem {
    pub fn new(mesh: &GridMesh, material: MaterialModel, loads: LoadCase, solver: SolverKind) -> Result<Self> {
        let ndof = mesh.dof_count();
        loads.validate(ndof)?;
        let d = mesh.dim().n();
        let k0 = element_stiffness(mesh.dim(), &material, mesh.edge_lengths())?;

        // Band-minimizing node order: the axis with the fewest nodes varies fastest.
        let nn = mesh.node_counts();
        let mut axes = [0usize, 1, 2];
        axes.sort_by_key(|&a| nn[a]);
        let mut by_position = vec![0usize; mesh.node_count()];
        for node in 0..mesh.node_count() {
            let c = mesh.node_ijk(node);
            let pos = c[axes[0]] + nn[axes[0]] * (c[axes[1]] + nn[axes[1]] * c[axes[2]]);
            by_position[pos] = node;
        }
        let mut is_fixed = vec![false; ndof];
        for &dof in loads.fixed() {
            is_fixed[dof] = true;
        }
        let mut equation = vec![FIXED; ndof];
        let mut free_count = 0;
        for &node in &by_position {
            for c in 0..d {
                let dof = mesh.dof(node, c);
                if !is_fixed[dof] {
                    equation[dof] = free_count;
                    free_count += 1;
                }
            }
        }
        if free_count == 0 {
            return Err(Error::invalid("every DOF is fixed"));
        }

        let ne = mesh.element_count();
        let mut element_eqs = Vec::with_capacity(ne * k0.size());
        let mut first: Vec<usize> = (0..free_count).collect();
        for e in 0..ne {
            let start = element_eqs.len();
            element_eqs.extend(mesh.element_dofs(e).iter().map(|&g| equation[g]));
            let eqs = &element_eqs[start..];
            if let Some(&lo) = eqs.iter().filter(|&&q| q != FIXED).min() {
                for &q in eqs.iter().filter(|&&q| q != FIXED) {
                    first[q] = first[q].min(lo);
                }
            }
        }

        let reduce = |list: &[(usize, f64)]| -> Vec<f64> {
            let mut out = vec![0.0; free_count];
            for &(dof, val) in list {
                if equation[dof] != FIXED {
                    out[equation[dof]] += val;
                }
            }
            out
        };
        let f = reduce(loads.loads());
        let fd = loads.has_dummy().then(|| reduce(loads.dummy_loads()));
        let springs = loads
            .springs()
            .iter()
            .filter(|(dof, _)| equation[*dof] != FIXED)
            .map(|&(dof, k)| (equation[dof], k))
            .collect();

        let direct = match solver {
            SolverKind::Direct => true,
            SolverKind::ConjugateGradient => false,
            SolverKind::Auto => EnvelopeMatrix::storage(&first) <= DIRECT_LIMIT,
        };
        let backend = if direct { Backend::Direct(EnvelopeMatrix::new(first)) } else { Backend::Iterative };

        Ok(StiffnessSystem {
            mesh: mesh.clone(),
            material,
            loads,
            k0,
            equation,
            element_eqs,
            free_count,
            springs,
            f,
            fd,
            backend,
            warm: None,
        })
    }

    pub fn mesh(&self) -> &GridMesh {
        &self.mesh
    }

    pub fn material(&self) -> &MaterialModel {
        &self.material
    }

    pub fn load_case(&self) -> &LoadCase {
        &self.loads
    }

    pub fn element_matrix(&self) -> &ElementMatrix {
        &self.k0
    }

    pub fn is_direct(&self) -> bool {
        matches!(self.backend, Backend::Direct(_))
    }

    /// Assembles `K(ρ)` and solves for the real and dummy loads.
    pub fn solve(&mut self, rho: &DensityField) -> Result<SystemState> {
        let ne = self.mesh.element_count();
        if rho.len() != ne {
            return Err(Error::invalid(format!("density has {} entries, mesh has {ne} elements", rho.len())));
        }
        let scales: Vec<f64> = rho.values().iter().map(|&r| self.material.simp_scale(r)).collect();
        let (ur, vr) = match &mut self.backend {
            Backend::Direct(env) => {
                env.clear();
                let m = self.k0.size();
                for (e, &s) in scales.iter().enumerate() {
                    let eqs = &self.element_eqs[e * m..(e + 1) * m];
                    for (a, &qa) in eqs.iter().enumerate() {
                        if qa == FIXED {
                            continue;
                        }
                        let row = self.k0.row(a);
                        for (b, &qb) in eqs.iter().enumerate() {
                            if qb != FIXED && qb <= qa {
                                env.add(qa, qb, s * row[b]);
                            }
                        }
                    }
                }
                for &(q, k) in &self.springs {
                    env.add(q, q, k);
                }
                env.factor()?;
                let env = &*env;
                let u = refined_solve(env, &self.f, |x, y| {
                    apply_reduced(&self.k0, &self.element_eqs, &self.springs, &scales, x, y)
                });
                let v = self.fd.as_ref().map(|fd| {
                    refined_solve(env, fd, |x, y| {
                        apply_reduced(&self.k0, &self.element_eqs, &self.springs, &scales, x, y)
                    })
                });
                (u, v)
            }
            Backend::Iterative => {
                let diag = self.reduced_diagonal(&scales);
                let max_iter = 20 * self.free_count + 100;
                let warm = self.warm.take();
                let u = {
                    let apply = |x: &[f64], y: &mut [f64]| self.apply_reduced(&scales, x, y);
                    pcg(apply, &diag, &self.f, warm.as_ref().map(|w| w.0.as_slice()), CG_TOL, max_iter)?
                };
                let v = match &self.fd {
                    Some(fd) => {
                        let apply = |x: &[f64], y: &mut [f64]| self.apply_reduced(&scales, x, y);
                        let x0 = warm.as_ref().and_then(|w| w.1.as_deref());
                        Some(pcg(apply, &diag, fd, x0, CG_TOL, max_iter)?)
                    }
                    None => None,
                };
                self.warm = Some((u.clone(), v.clone()));
                (u, v)
            }
        };

        let ur = self.polish(&scales, ur, &self.f, "real")?;
        let vr = match (vr, &self.fd) {
            (Some(v), Some(fd)) => Some(self.polish(&scales, v, fd, "dummy")?),
            _ => None,
        };
        Ok(SystemState { u: self.expand(&ur), v: vr.map(|v| self.expand(&v)), scales })
    }

    fn expand(&self, reduced: &[f64]) -> Vec<f64> {
        self.equation.iter().map(|&q| if q == FIXED { 0.0 } else { reduced[q] }).collect()
    }

    fn reduced_diagonal(&self, scales: &[f64]) -> Vec<f64> {
        let m = self.k0.size();
        let mut diag = vec![0.0; self.free_count];
        for (e, &s) in scales.iter().enumerate() {
            for (a, &q) in self.element_eqs[e * m..(e + 1) * m].iter().enumerate() {
                if q != FIXED {
                    diag[q] += s * self.k0.get(a, a);
                }
            }
        }
        for &(q, k) in &self.springs {
            diag[q] += k;
        }
        diag
    }

    fn apply_reduced(&self, scales: &[f64], x: &[f64], y: &mut [f64]) {
        apply_reduced(&self.k0, &self.element_eqs, &self.springs, scales, x, y);
    }

    /// Accepts `x` when `‖b − Kx‖ ≤ 1e-9 ‖b‖`. The direct backend first
    /// refines against a residual computed with error-free products until
    /// the correction drops below working precision, so that the result is
    /// close to the correctly rounded solution.
    fn polish(&self, scales: &[f64], mut x: Vec<f64>, b: &[f64], which: &str) -> Result<Vec<f64>> {
        let bn = sqrt(dot(b, b));
        let tol = RESIDUAL_TOL * bn;
        let rn = match &self.backend {
            Backend::Direct(env) => {
                let mut r = self.accurate_residual(scales, &x, b);
                for _ in 0..ACCURATE_REFINE_STEPS {
                    env.solve_in_place(&mut r);
                    let (dn, xn) = (sqrt(dot(&r, &r)), sqrt(dot(&x, &x)));
                    for (xi, ri) in x.iter_mut().zip(&r) {
                        *xi += ri;
                    }
                    r = self.accurate_residual(scales, &x, b);
                    if !dn.is_finite() || dn <= f64::EPSILON * xn {
                        break;
                    }
                }
                sqrt(dot(&r, &r))
            }
            Backend::Iterative => {
                let mut kx = vec![0.0; self.free_count];
                self.apply_reduced(scales, &x, &mut kx);
                let plain = sqrt(kx.iter().zip(b).map(|(k, b)| (k - b) * (k - b)).sum());
                if plain.is_finite() && plain <= tol {
                    return Ok(x);
                }
                let r = self.accurate_residual(scales, &x, b);
                sqrt(dot(&r, &r))
            }
        };
        if rn.is_finite() && rn <= tol {
            Ok(x)
        } else {
            Err(Error::numerical(format!(
                "{which} load solve residual {:.3e} exceeds tolerance (insufficient supports or negative spring?)",
                if bn > 0.0 { rn / bn } else { rn }
            )))
        }
    }

    /// `b − Kx` with every product and sum carried in double-double.
    fn accurate_residual(&self, scales: &[f64], x: &[f64], b: &[f64]) -> Vec<f64> {
        let m = self.k0.size();
        let mut acc: Vec<CompensatedSum> = b
            .iter()
            .map(|&v| {
                let mut c = CompensatedSum::default();
                c.add(v);
                c
            })
            .collect();
        for (e, &s) in scales.iter().enumerate() {
            let eqs = &self.element_eqs[e * m..(e + 1) * m];
            for (a, &qa) in eqs.iter().enumerate() {
                if qa == FIXED {
                    continue;
                }
                let row = self.k0.row(a);
                for (kb, &qb) in row.iter().zip(eqs) {
                    if qb != FIXED {
                        acc[qa].add_product(-(s * kb), x[qb]);
                    }
                }
            }
        }
        for &(q, k) in &self.springs {
            acc[q].add_product(-k, x[q]);
        }
        acc.iter().map(|c| c.value()).collect()
    }

    /// Per-element quadratic forms of the unscaled element matrix.
    pub fn energy_terms(&self, state: &SystemState) -> EnergyTerms {
        element_strain_energy_terms(&self.mesh, &self.k0, state)
    }

    /// `Σ k u_d²` and `Σ k u_d v_d` over the grounded springs.
    pub fn spring_energy(&self, state: &SystemState) -> (f64, Option<f64>) {
        let uu = self.loads.springs().iter().map(|&(d, k)| k * state.u[d] * state.u[d]).sum();
        let uv = state.v.as_ref().map(|v| self.loads.springs().iter().map(|&(d, k)| k * state.u[d] * v[d]).sum());
        (uu, uv)
    }

    /// `uᵀK(ρ)u` and `vᵀK(ρ)u` including springs.
    pub fn global_energies(&self, state: &SystemState) -> (f64, Option<f64>) {
        let terms = self.energy_terms(state);
        let (su, sv) = self.spring_energy(state);
        let uu = state.scales.iter().zip(&terms.uu).map(|(s, t)| s * t).sum::<f64>() + su;
        let uv = terms
            .uv
            .as_ref()
            .map(|uv| state.scales.iter().zip(uv).map(|(s, t)| s * t).sum::<f64>() + sv.unwrap_or(0.0));
        (uu, uv)
    }
}

/// `y = K x` on the free equations.
fn apply_reduced(
    k0: &ElementMatrix,
    element_eqs: &[usize],
    springs: &[(usize, f64)],
    scales: &[f64],
    x: &[f64],
    y: &mut [f64],
) {
    let m = k0.size();
    y.iter_mut().for_each(|v| *v = 0.0);
    let mut xe = [0.0f64; 24];
    let mut ye = [0.0f64; 24];
    for (e, &s) in scales.iter().enumerate() {
        let eqs = &element_eqs[e * m..(e + 1) * m];
        for (a, &q) in eqs.iter().enumerate() {
            xe[a] = if q == FIXED { 0.0 } else { x[q] };
        }
        k0.mul_vec(&xe[..m], &mut ye[..m]);
        for (a, &q) in eqs.iter().enumerate() {
            if q != FIXED {
                y[q] += s * ye[a];
            }
        }
    }
    for &(q, k) in springs {
        y[q] += k * x[q];
    }
}

/// Direct solve followed by a few steps of iterative refinement, which
/// recovers the accuracy lost to large stiffness contrasts.
fn refined_solve(env: &EnvelopeMatrix, b: &[f64], mut apply: impl FnMut(&[f64], &mut [f64])) -> Vec<f64> {
    let mut x = b.to_vec();
    env.solve_in_place(&mut x);
    let bn = sqrt(dot(b, b));
    let mut r = vec![0.0; b.len()];
    for _ in 0..REFINE_STEPS {
        apply(&x, &mut r);
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
        if sqrt(dot(&r, &r)) <= 0.01 * RESIDUAL_TOL * bn {
            break;
        }

        env.solve_in_place(&mut r);
        for (xi, ri) in x.iter_mut().zip(&r) {
            *xi += ri;
        }
    }
    x
}

/// Per-element `u_eᵀK₀u_e` (clamped at zero against round-off) and, when a
/// dummy solution exists, `u_eᵀK₀v_e`.
pub fn element_strain_energy_terms(mesh: &GridMesh, k0: &ElementMatrix, state: &SystemState) -> EnergyTerms {
    let m = k0.size();
    let dim = mesh.dim().n();
    let ne = mesh.element_count();
    let mut ue = [0.0f64; 24];
    let mut ve = [0.0f64; 24];
    let mut ku = [0.0f64; 24];
    let mut uu = Vec::with_capacity(ne);
    let mut uv = state.v.as_ref().map(|_| Vec::with_capacity(ne));
    for e in 0..ne {
        let dofs = mesh.element_dofs(e);
        for (a, &g) in dofs.iter().enumerate() {
            ue[a] = state.u[g];
        }
        // K0 annihilates rigid translations; removing the mean keeps large
        // rigid-body displacements from swamping the strain energy.
        remove_translation(&mut ue[..m], dim);
        compensated_mul(k0, &ue[..m], &mut ku[..m]);
        uu.push(compensated_dot(&ue[..m], &ku[..m]).max(0.0));
        if let (Some(v), Some(out)) = (&state.v, &mut uv) {
            for (a, &g) in dofs.iter().enumerate() {
                ve[a] = v[g];
            }
            remove_translation(&mut ve[..m], dim);
            out.push(compensated_dot(&ve[..m], &ku[..m]));
        }
    }
    EnergyTerms { uu, uv }
}

fn remove_translation(x: &mut [f64], dim: usize) {
    let nodes = x.len() / dim;
    for c in 0..dim {
        let mut s = CompensatedSum::default();
        for a in 0..nodes {
            s.add(x[a * dim + c]);
        }
        let mean = s.value() / nodes as f64;
        for a in 0..nodes {
            x[a * dim + c] -= mean;
        }
    }
}

fn compensated_dot(a: &[f64], b: &[f64]) -> f64 {
    let mut s = CompensatedSum::default();
    for (x, y) in a.iter().zip(b) {
        s.add_product(*x, *y);
    }
    s.value()
}

fn compensated_mul(k: &ElementMatrix, x: &[f64], out: &mut [f64]) {
    for (r, o) in out.iter_mut().enumerate() {
        *o = compensated_dot(k.row(r), x);
    }
}

/// One-shot assembly and solve with automatic solver selection.
pub fn assemble_and_solve(
    mesh: &GridMesh,
    rho: &DensityField,
    material: &MaterialModel,
    loads: &LoadCase,
) -> Result<SystemState> {
    StiffnessSystem::new(mesh, *material, loads.clone(), SolverKind::Auto)?.solve(rho)
}
