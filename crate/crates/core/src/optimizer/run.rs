use alloc::vec;
use alloc::vec::Vec;
use core::ops::ControlFlow;

use super::problem::TOL_FUN_WINDOW;
use super::{apply_step_damping, DesignMethod, MmaState, ProblemSpec};
use crate::density::{
    backpropagate, evaluate_density, grayness, projection_backpropagate, projection_density, DensityField, DesignField,
    ProjectionField,
};
use crate::fem::StiffnessSystem;
use crate::mesh::{build_neighborhoods, NeighborhoodTable};
use crate::objectives::{objective_and_sens, volume_constraint_and_sens};
use crate::{math, Error, Result};

/// Values recorded after evaluating one design.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub f0: f64,
    pub g1: f64,
    pub grayness: f64,
    /// Projection sharpness, `None` for nFP runs.
    pub sharpness: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Termination {
    MaxIterations,
    GraynessReached,
    ObjectiveStalled,
    Observer,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub iteration: usize,
    pub density: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizationTrace {
    /// Row 0 is the initial design.
    pub history: Vec<IterationRecord>,
    pub snapshots: Vec<Snapshot>,
    pub final_density: DensityField,
    pub final_design: Vec<f64>,
    pub termination: Termination,
}

impl OptimizationTrace {
    pub fn last(&self) -> &IterationRecord {
        self.history.last().expect("trace always holds the initial record")
    }

    pub fn first(&self) -> &IterationRecord {
        &self.history[0]
    }

    /// First iteration whose grayness is at or below `g_tol`.
    pub fn first_reaching(&self, g_tol: f64) -> Option<usize> {
        self.history.iter().find(|r| r.grayness <= g_tol).map(|r| r.iteration)
    }

    pub fn min_grayness(&self) -> f64 {
        self.history.iter().map(|r| r.grayness).fold(f64::INFINITY, f64::min)
    }
}

enum Design {
    Nfp(DesignField),
    Projection(ProjectionField),
}

struct Evaluation {
    rho: DensityField,
    f0: f64,
    g1: f64,
    df: Vec<f64>,
    dg: Vec<f64>,
    gray: f64,
}

impl Design {
    fn values(&self) -> &[f64] {
        match self {
            Design::Nfp(d) => d.values(),
            Design::Projection(p) => p.values(),
        }
    }

    fn set_values(&mut self, values: Vec<f64>) -> Result<()> {
        match self {
            Design::Nfp(d) => d.set_values(values),
            Design::Projection(p) => {
                let s = p.sharpness();
                *p = ProjectionField::new(values, s)?;
                Ok(())
            }
        }
    }

    fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            Design::Nfp(d) => (d.lower().to_vec(), d.upper().to_vec()),
            Design::Projection(p) => (vec![0.0; p.len()], vec![1.0; p.len()]),
        }
    }
}

fn evaluate(
    design: &Design,
    table: &NeighborhoodTable,
    system: &mut StiffnessSystem,
    spec: &ProblemSpec,
) -> Result<Evaluation> {
    let rho = match design {
        Design::Nfp(d) => evaluate_density(d, table)?,
        Design::Projection(p) => projection_density(p, table)?,
    };
    let state = system.solve(&rho)?;
    let (f0, df_rho) = objective_and_sens(system, &state, &rho, &spec.objective)?;
    let (g1, dg_rho) = volume_constraint_and_sens(&rho, &spec.mesh, &spec.objective)?;
    let (df, dg) = match design {
        Design::Nfp(d) => (backpropagate(&df_rho, &rho, d, table)?, backpropagate(&dg_rho, &rho, d, table)?),
        Design::Projection(p) => {
            (projection_backpropagate(&df_rho, &rho, p, table)?, projection_backpropagate(&dg_rho, &rho, p, table)?)
        }
    };
    let gray = grayness(&rho)?;
    Ok(Evaluation { rho, f0, g1, df, dg, gray })
}

/// Runs the optimization loop to termination.
pub fn run(spec: &ProblemSpec) -> Result<OptimizationTrace> {
    run_with_observer(spec, |_, _| ControlFlow::Continue(()))
}

/// As [`run`], calling `observer` after every evaluated design. Returning
/// `ControlFlow::Break` stops the run.
pub fn run_with_observer(
    spec: &ProblemSpec,
    mut observer: impl FnMut(&IterationRecord, &DensityField) -> ControlFlow<()>,
) -> Result<OptimizationTrace> {
    spec.validate()?;
    let table = build_neighborhoods(&spec.mesh, spec.neighborhood)?;
    let mut system = StiffnessSystem::new(&spec.mesh, spec.material, spec.loads.clone(), spec.solver)?;
    let vf = spec.objective.volume_fraction();
    let n = spec.mesh.element_count();

    let mut design = match spec.method {
        DesignMethod::Nfp { shaping } => Design::Nfp(DesignField::uniform_for_density(vf, shaping, &table)?),
        DesignMethod::Projection { .. } => {
            let mu0 = -math::ln_1p(-vf);
            Design::Projection(ProjectionField::new(vec![mu0.min(1.0); n], 1.0)?)
        }
    };
    let (lower, upper) = design.bounds();
    let stop = spec.optimizer.stopping;
    let every = spec.optimizer.snapshot_every;
    let mut mma = MmaState::new(n, spec.optimizer.mma);
    let mut history = Vec::new();
    let mut snapshots = Vec::new();

    let mut iteration = 0;
    loop {
        if let (Design::Projection(p), Some(s)) = (&mut design, spec.method.sharpness_at(iteration)) {
            p.set_sharpness(s)?;
        }
        let ev = evaluate(&design, &table, &mut system, spec).map_err(|e| Error::at_iteration(iteration, e))?;
        let record = IterationRecord {
            iteration,
            f0: ev.f0,
            g1: ev.g1,
            grayness: ev.gray,
            sharpness: spec.method.sharpness_at(iteration),
        };
        history.push(record);
        if every > 0 && iteration % every == 0 {
            snapshots.push(Snapshot { iteration, density: ev.rho.values().to_vec() });
        }
        let flow = observer(&record, &ev.rho);

        let reason = if flow.is_break() {
            Some(Termination::Observer)
        } else if stop.g_tol().is_some_and(|g| ev.gray <= g) {
            Some(Termination::GraynessReached)
        } else if stop.tol_fun().is_some_and(|t| stalled(&history, t)) {
            Some(Termination::ObjectiveStalled)
        } else if iteration >= stop.max_iter() {
            Some(Termination::MaxIterations)
        } else {
            None
        };
        if let Some(reason) = reason {
            let final_design = design.values().to_vec();
            if every > 0 && snapshots.last().map(|s| s.iteration) != Some(iteration) {
                snapshots.push(Snapshot { iteration, density: ev.rho.values().to_vec() });
            }
            return Ok(OptimizationTrace {
                history,
                snapshots,
                final_density: ev.rho,
                final_design,
                termination: reason,
            });
        }

        let x = design.values();
        let next = mma
            .step(x, ev.f0, &ev.df, ev.g1, &ev.dg, &lower, &upper)
            .and_then(|cand| apply_step_damping(x, &cand, spec.optimizer.step, &lower, &upper))
            .and_then(|next| design.set_values(next))
            .map_err(|e| Error::at_iteration(iteration, e));
        next?;
        iteration += 1;
    }
}

fn stalled(history: &[IterationRecord], tol: f64) -> bool {
    if history.len() <= TOL_FUN_WINDOW {
        return false;
    }
    let tail = &history[history.len() - TOL_FUN_WINDOW - 1..];
    tail.windows(2).all(|w| (w[1].f0 - w[0].f0).abs() < tol)
}
