//! End-to-end sensitivity checks through density evaluation, the linear
//! solve and the objective, against central finite differences.

use nfptop_core::density::{backpropagate, evaluate_density, DesignField, ShapingFunction};
use nfptop_core::fem::{LoadCase, MaterialModel, SolverKind, StiffnessSystem};
use nfptop_core::mesh::{build_grid, build_neighborhoods, Dim, GridMesh, NeighborhoodShape, NeighborhoodTable};
use nfptop_core::objectives::{objective_and_sens, volume_constraint_and_sens, ObjectiveKind, ObjectiveSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cantilever(nx: usize, ny: usize) -> (GridMesh, LoadCase) {
    let mesh = build_grid(Dim::Two, &[nx, ny], &[1.0, 1.0]).unwrap();
    let mut lc = LoadCase::new();
    for j in 0..=ny {
        let n = mesh.node_index(0, j, 0);
        lc.fix_all([mesh.dof(n, 0), mesh.dof(n, 1)]);
    }
    lc.load(mesh.dof(mesh.node_index(nx, ny / 2, 0), 1), -1.0);
    (mesh, lc)
}

fn inverter(nx: usize, ny: usize) -> (GridMesh, LoadCase) {
    let mesh = build_grid(Dim::Two, &[nx, ny], &[1.0, 1.0]).unwrap();
    let mut lc = LoadCase::new();
    for i in 0..=nx {
        lc.fix(mesh.dof(mesh.node_index(i, 0, 0), 1));
    }
    let top = mesh.node_index(0, ny, 0);
    lc.fix_all([mesh.dof(top, 0), mesh.dof(top, 1)]);
    let input = mesh.dof(mesh.node_index(0, 0, 0), 0);
    let output = mesh.dof(mesh.node_index(nx, 0, 0), 0);
    lc.load(input, 1.0).spring(input, 100.0).spring(output, 100.0).dummy_load(output, -1.0);
    (mesh, lc)
}

struct Pipeline {
    table: NeighborhoodTable,
    system: StiffnessSystem,
    spec: ObjectiveSpec,
}

impl Pipeline {
    fn new(mesh: &GridMesh, lc: LoadCase, kind: ObjectiveKind, shape: NeighborhoodShape) -> Self {
        Pipeline {
            table: build_neighborhoods(mesh, shape).unwrap(),
            system: StiffnessSystem::new(mesh, MaterialModel::default(), lc, SolverKind::Direct).unwrap(),
            spec: ObjectiveSpec::with_default_scale(kind, 0.4).unwrap(),
        }
    }

    fn value(&mut self, d: &DesignField) -> (f64, f64) {
        let rho = evaluate_density(d, &self.table).unwrap();
        let st = self.system.solve(&rho).unwrap();
        let f = objective_and_sens(&self.system, &st, &rho, &self.spec).unwrap().0;
        let g = volume_constraint_and_sens(&rho, self.system.mesh(), &self.spec).unwrap().0;
        (f, g)
    }

    fn gradient(&mut self, d: &DesignField) -> (Vec<f64>, Vec<f64>) {
        let rho = evaluate_density(d, &self.table).unwrap();
        let st = self.system.solve(&rho).unwrap();
        let df = objective_and_sens(&self.system, &st, &rho, &self.spec).unwrap().1;
        let dg = volume_constraint_and_sens(&rho, self.system.mesh(), &self.spec).unwrap().1;
        (backpropagate(&df, &rho, d, &self.table).unwrap(), backpropagate(&dg, &rho, d, &self.table).unwrap())
    }
}

fn random_design(n: usize, table: &NeighborhoodTable, seed: u64) -> DesignField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..n).map(|_| rng.random_range(-2.5..-0.05)).collect();
    DesignField::with_default_bounds(values, ShapingFunction::Exp, table).unwrap()
}

fn check(mut p: Pipeline, n: usize, seed: u64, tol: f64) {
    let d = random_design(n, &p.table, seed);
    let (df, dg) = p.gradient(&d);
    let h = 1e-6;
    let scale_f = df.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for j in 0..n {
        let mut plus = d.values().to_vec();
        let mut minus = plus.clone();
        plus[j] += h;
        minus[j] -= h;
        let mut dp = d.clone();
        dp.set_values(plus).unwrap();
        let mut dm = d.clone();
        dm.set_values(minus).unwrap();
        let (fp, gp) = p.value(&dp);
        let (fm, gm) = p.value(&dm);
        let fd_f = (fp - fm) / (2.0 * h);
        let fd_g = (gp - gm) / (2.0 * h);
        let err_f = (fd_f - df[j]).abs() / df[j].abs().max(1e-3 * scale_f);
        assert!(err_f < tol, "objective gradient {j}: adjoint {} vs fd {fd_f} (rel {err_f:.2e})", df[j]);
        assert!((fd_g - dg[j]).abs() < 1e-6 * dg[j].abs().max(1e-8), "volume gradient {j}");
    }
}

#[test]
fn stiff_gradient_matches_finite_differences() {
    let (mesh, lc) = cantilever(8, 4);
    let p = Pipeline::new(&mesh, lc, ObjectiveKind::Stiff, NeighborhoodShape::Square(1));
    check(p, 32, 11, 1e-4);
}

#[test]
fn compliant_gradient_matches_finite_differences() {
    let (mesh, lc) = inverter(8, 4);
    let p = Pipeline::new(&mesh, lc, ObjectiveKind::Compliant, NeighborhoodShape::Square(1));
    check(p, 32, 12, 1e-4);
}

#[test]
fn gradients_on_circle_neighborhoods() {
    let (mesh, lc) = inverter(8, 4);
    let p = Pipeline::new(&mesh, lc, ObjectiveKind::Compliant, NeighborhoodShape::Circle(1.5));
    check(p, 32, 13, 1e-4);
}
