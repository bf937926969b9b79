//! Moving-asymptote optimizer, step damping, and the optimization loop.

mod damping;
mod mma;
mod problem;
mod run;

pub use damping::apply_step_damping;
pub use mma::{MmaSettings, MmaState};
pub use problem::{
    DesignMethod, OptimizerSettings, ProblemSpec, StoppingRule, DEFAULT_STEP, DEFAULT_TOL_FUN, TOL_FUN_WINDOW,
};
pub use run::{run, run_with_observer, IterationRecord, OptimizationTrace, Snapshot, Termination};
