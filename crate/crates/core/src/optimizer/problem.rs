use alloc::format;

use super::MmaSettings;
use crate::density::ShapingFunction;
use crate::fem::{LoadCase, MaterialModel, SolverKind};
use crate::mesh::{GridMesh, NeighborhoodShape};
use crate::objectives::ObjectiveSpec;
use crate::{Error, Result};

/// Default damping factor for nFP runs.
pub const DEFAULT_STEP: f64 = 0.005;
/// Default objective-change tolerance.
pub const DEFAULT_TOL_FUN: f64 = 1e-10;
/// Iterations compared by the objective-change stop.
pub const TOL_FUN_WINDOW: usize = 10;

/// How design variables map to densities.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DesignMethod {
    /// Normalized field product with the given shaping function and default bounds.
    Nfp { shaping: ShapingFunction },
    /// Heaviside projection, sharpness starting at 1 and doubling every
    /// `interval` iterations up to `beta_max`.
    Projection { beta_max: f64, interval: usize },
}

impl DesignMethod {
    pub fn validate(&self) -> Result<()> {
        if let DesignMethod::Projection { beta_max, interval } = *self {
            if !(beta_max >= 1.0 && beta_max.is_finite()) {
                return Err(Error::invalid(format!("projection beta_max must be >= 1, got {beta_max}")));
            }
            if interval == 0 {
                return Err(Error::invalid("projection continuation interval must be >= 1"));
            }
        }
        Ok(())
    }

    /// Projection sharpness at `iteration`: `min(2^⌊iteration/interval⌋, beta_max)`.
    pub fn sharpness_at(&self, iteration: usize) -> Option<f64> {
        match *self {
            DesignMethod::Nfp { .. } => None,
            DesignMethod::Projection { beta_max, interval } => {
                let doublings = (iteration / interval).min(1023) as i32;
                Some(crate::math::powi(2.0, doublings).min(beta_max))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StoppingRule {
    max_iter: usize,
    g_tol: Option<f64>,
    tol_fun: Option<f64>,
}

impl Default for StoppingRule {
    fn default() -> Self {
        StoppingRule { max_iter: 1000, g_tol: None, tol_fun: Some(DEFAULT_TOL_FUN) }
    }
}

impl StoppingRule {
    pub fn new(max_iter: usize, g_tol: Option<f64>, tol_fun: Option<f64>) -> Result<Self> {
        if max_iter == 0 {
            return Err(Error::invalid("max_iter must be >= 1"));
        }
        if let Some(g) = g_tol {
            if !(g > 0.0 && g < 1.0) {
                return Err(Error::invalid(format!("g_tol must be in (0, 1), got {g}")));
            }
        }
        if let Some(t) = tol_fun {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(Error::invalid(format!("tol_fun must be >= 0, got {t}")));
            }
        }
        Ok(StoppingRule { max_iter, g_tol, tol_fun })
    }

    pub fn max_iter(&self) -> usize {
        self.max_iter
    }

    pub fn g_tol(&self) -> Option<f64> {
        self.g_tol
    }

    pub fn tol_fun(&self) -> Option<f64> {
        self.tol_fun
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptimizerSettings {
    /// Damping factor `S` in `(0, 1]`.
    pub step: f64,
    pub stopping: StoppingRule,
    pub mma: MmaSettings,
    /// Density snapshot cadence in iterations, 0 to disable.
    pub snapshot_every: usize,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        OptimizerSettings {
            step: DEFAULT_STEP,
            stopping: StoppingRule::default(),
            mma: MmaSettings::default(),
            snapshot_every: 50,
        }
    }
}

/// Everything needed for one optimization run.
#[derive(Clone, Debug)]
pub struct ProblemSpec {
    pub mesh: GridMesh,
    pub neighborhood: NeighborhoodShape,
    pub method: DesignMethod,
    pub material: MaterialModel,
    pub loads: LoadCase,
    pub objective: ObjectiveSpec,
    pub optimizer: OptimizerSettings,
    pub solver: SolverKind,
}

impl ProblemSpec {
    pub fn validate(&self) -> Result<()> {
        self.method.validate()?;
        self.loads.validate(self.mesh.dof_count())?;
        let s = self.optimizer.step;
        if !(s > 0.0 && s <= 1.0) {
            return Err(Error::invalid(format!("step size must be in (0, 1], got {s}")));
        }
        if self.objective.kind() == crate::objectives::ObjectiveKind::Compliant && !self.loads.has_dummy() {
            return Err(Error::invalid("compliant objective requires a dummy load"));
        }
        Ok(())
    }
}
