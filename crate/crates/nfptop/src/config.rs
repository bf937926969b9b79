//! Run configuration: flat TOML keys on top of a named preset.
//!
//! Every key except `preset` is optional. Missing keys take the preset's
//! default, and the resolved [`RunConfig`] serializes back to a file that
//! loads to an identical value.

use std::fs;
use std::path::{Path, PathBuf};

use nfptop_core::density::ShapingFunction;
use nfptop_core::fem::{MaterialModel, SolverKind};
use nfptop_core::mesh::{build_grid, Dim, NeighborhoodShape};
use nfptop_core::objectives::{ObjectiveKind, ObjectiveSpec};
use nfptop_core::optimizer::{
    DesignMethod, MmaSettings, OptimizerSettings, ProblemSpec, StoppingRule, DEFAULT_STEP, DEFAULT_TOL_FUN,
};
use serde::{Deserialize, Serialize};

use crate::presets::{Preset, DEFAULT_SPRING};

/// Damping factor used when a projection run leaves `step` unset.
pub const DEFAULT_PROJECTION_STEP: f64 = 0.05;
pub const DEFAULT_BETA_MAX: f64 = 512.0;
pub const DEFAULT_BETA_INTERVAL: usize = 50;
pub const DEFAULT_SNAPSHOT_EVERY: usize = 50;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid value for `{key}`: {message}")]
    Invalid { key: &'static str, message: String },
}

impl ConfigError {
    fn invalid(key: &'static str, message: impl Into<String>) -> Self {
        ConfigError::Invalid { key, message: message.into() }
    }

    /// Offending key of a validation error.
    pub fn key(&self) -> Option<&'static str> {
        match self {
            ConfigError::Invalid { key, .. } => Some(key),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodKind {
    Nfp,
    Projection,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NeighborhoodKind {
    Square,
    Circle,
    Immediate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapingKind {
    Exp,
    Tanh,
    Power,
    Atan,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverChoice {
    Auto,
    Direct,
    Cg,
}

/// Fully resolved run settings.
///
/// `g_tol = 0` and `tol_fun = 0` disable the respective stopping tests.
/// `lz` and `nz` are 1 for 2D presets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub preset: Preset,
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub lx: f64,
    pub ly: f64,
    pub lz: f64,
    pub vf: f64,
    pub method: MethodKind,
    pub neighborhood: NeighborhoodKind,
    pub ls: usize,
    pub r_min: f64,
    pub shaping: ShapingKind,
    pub power_n: u32,
    pub youngs_modulus: f64,
    pub poisson: f64,
    pub penalty: f64,
    pub rho_min: f64,
    pub scale: f64,
    pub spring: f64,
    pub step: f64,
    pub max_iter: usize,
    pub g_tol: f64,
    pub tol_fun: f64,
    pub beta_max: f64,
    pub beta_interval: usize,
    pub solver: SolverChoice,
    pub output_dir: PathBuf,
    pub snapshot_every: usize,
}

/// On-disk form: every key optional except `preset`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub preset: Option<Preset>,
    pub nx: Option<usize>,
    pub ny: Option<usize>,
    pub nz: Option<usize>,
    pub lx: Option<f64>,
    pub ly: Option<f64>,
    pub lz: Option<f64>,
    pub vf: Option<f64>,
    pub method: Option<MethodKind>,
    pub neighborhood: Option<NeighborhoodKind>,
    pub ls: Option<usize>,
    pub r_min: Option<f64>,
    pub shaping: Option<ShapingKind>,
    pub power_n: Option<u32>,
    pub youngs_modulus: Option<f64>,
    pub poisson: Option<f64>,
    pub penalty: Option<f64>,
    pub rho_min: Option<f64>,
    pub scale: Option<f64>,
    pub spring: Option<f64>,
    pub step: Option<f64>,
    pub max_iter: Option<usize>,
    pub g_tol: Option<f64>,
    pub tol_fun: Option<f64>,
    pub beta_max: Option<f64>,
    pub beta_interval: Option<usize>,
    pub solver: Option<SolverChoice>,
    pub output_dir: Option<PathBuf>,
    pub snapshot_every: Option<usize>,
}

/// Reads, parses and validates a run configuration file.
pub fn load_config(path: impl AsRef<Path>) -> Result<RunConfig, ConfigError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    parse_raw(text)?.resolve()
}

pub(crate) fn parse_toml<T: serde::de::DeserializeOwned>(text: &str) -> Result<T, ConfigError> {
    toml::from_str(text).map_err(|e| {
        let line = e.span().map_or(1, |s| text[..s.start.min(text.len())].matches('\n').count() + 1);
        ConfigError::Parse { line, message: e.message().trim().to_string() }
    })
}

pub fn parse_raw(text: &str) -> Result<RawConfig, ConfigError> {
    parse_toml(text)
}

impl RawConfig {
    /// Fills defaults from the preset and validates every key.
    pub fn resolve(&self) -> Result<RunConfig, ConfigError> {
        let preset = self.preset.ok_or_else(|| ConfigError::invalid("preset", "a preset name is required"))?;
        let d = RunConfig::for_preset(preset);
        let method = self.method.unwrap_or(d.method);
        let (nx, ny, nz) = (self.nx.unwrap_or(d.nx), self.ny.unwrap_or(d.ny), self.nz.unwrap_or(d.nz));
        let cfg = RunConfig {
            preset,
            nx,
            ny,
            nz,
            lx: self.lx.unwrap_or(nx as f64),
            ly: self.ly.unwrap_or(ny as f64),
            lz: self.lz.unwrap_or(nz as f64),
            vf: self.vf.unwrap_or(d.vf),
            method,
            neighborhood: self.neighborhood.unwrap_or(d.neighborhood),
            ls: self.ls.unwrap_or(d.ls),
            r_min: self.r_min.unwrap_or(d.r_min),
            shaping: self.shaping.unwrap_or(d.shaping),
            power_n: self.power_n.unwrap_or(d.power_n),
            youngs_modulus: self.youngs_modulus.unwrap_or(d.youngs_modulus),
            poisson: self.poisson.unwrap_or(d.poisson),
            penalty: self.penalty.unwrap_or(d.penalty),
            rho_min: self.rho_min.unwrap_or(d.rho_min),
            scale: self.scale.unwrap_or(d.scale),
            spring: self.spring.unwrap_or(d.spring),
            step: self.step.unwrap_or(match method {
                MethodKind::Nfp => DEFAULT_STEP,
                MethodKind::Projection => DEFAULT_PROJECTION_STEP,
            }),
            max_iter: self.max_iter.unwrap_or(d.max_iter),
            g_tol: self.g_tol.unwrap_or(d.g_tol),
            tol_fun: self.tol_fun.unwrap_or(d.tol_fun),
            beta_max: self.beta_max.unwrap_or(d.beta_max),
            beta_interval: self.beta_interval.unwrap_or(d.beta_interval),
            solver: self.solver.unwrap_or(d.solver),
            output_dir: self.output_dir.clone().unwrap_or(d.output_dir),
            snapshot_every: self.snapshot_every.unwrap_or(d.snapshot_every),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl From<&RunConfig> for RawConfig {
    fn from(c: &RunConfig) -> Self {
        RawConfig {
            preset: Some(c.preset),
            nx: Some(c.nx),
            ny: Some(c.ny),
            nz: Some(c.nz),
            lx: Some(c.lx),
            ly: Some(c.ly),
            lz: Some(c.lz),
            vf: Some(c.vf),
            method: Some(c.method),
            neighborhood: Some(c.neighborhood),
            ls: Some(c.ls),
            r_min: Some(c.r_min),
            shaping: Some(c.shaping),
            power_n: Some(c.power_n),
            youngs_modulus: Some(c.youngs_modulus),
            poisson: Some(c.poisson),
            penalty: Some(c.penalty),
            rho_min: Some(c.rho_min),
            scale: Some(c.scale),
            spring: Some(c.spring),
            step: Some(c.step),
            max_iter: Some(c.max_iter),
            g_tol: Some(c.g_tol),
            tol_fun: Some(c.tol_fun),
            beta_max: Some(c.beta_max),
            beta_interval: Some(c.beta_interval),
            solver: Some(c.solver),
            output_dir: Some(c.output_dir.clone()),
            snapshot_every: Some(c.snapshot_every),
        }
    }
}

fn check(ok: bool, key: &'static str, message: impl FnOnce() -> String) -> Result<(), ConfigError> {
    if ok {
        Ok(())
    } else {
        Err(ConfigError::invalid(key, message()))
    }
}

impl RunConfig {
    pub fn for_preset(preset: Preset) -> RunConfig {
        let [nx, ny, nz] = preset.default_counts();
        let material = MaterialModel::default();
        RunConfig {
            preset,
            nx,
            ny,
            nz,
            lx: nx as f64,
            ly: ny as f64,
            lz: nz as f64,
            vf: preset.default_volume_fraction(),
            method: MethodKind::Nfp,
            neighborhood: preset.default_neighborhood(),
            ls: 2,
            r_min: 2.0,
            shaping: ShapingKind::Exp,
            power_n: ShapingFunction::DEFAULT_POWER,
            youngs_modulus: material.youngs_modulus(),
            poisson: material.poisson_ratio(),
            penalty: material.penalty(),
            rho_min: material.rho_min(),
            scale: preset.objective().default_scale(),
            spring: DEFAULT_SPRING,
            step: DEFAULT_STEP,
            max_iter: preset.default_max_iter(),
            g_tol: 0.0,
            tol_fun: DEFAULT_TOL_FUN,
            beta_max: DEFAULT_BETA_MAX,
            beta_interval: DEFAULT_BETA_INTERVAL,
            solver: SolverChoice::Auto,
            output_dir: PathBuf::from("out").join(preset.name()),
            snapshot_every: DEFAULT_SNAPSHOT_EVERY,
        }
    }

    pub fn dim(&self) -> Dim {
        self.preset.dim()
    }

    /// Element counts, `z` included.
    pub fn counts(&self) -> [usize; 3] {
        [self.nx, self.ny, self.nz]
    }

    pub fn extent(&self) -> [f64; 3] {
        [self.lx, self.ly, self.lz]
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let three = self.dim() == Dim::Three;
        check(self.nx >= 1, "nx", || "must be >= 1".into())?;
        check(self.ny >= 1, "ny", || "must be >= 1".into())?;
        check(if three { self.nz >= 1 } else { self.nz == 1 }, "nz", || {
            format!("must be >= 1 in 3D and exactly 1 in 2D, got {}", self.nz)
        })?;
        for (key, v) in [("lx", self.lx), ("ly", self.ly), ("lz", self.lz)] {
            check(v > 0.0 && v.is_finite(), key, || format!("must be positive, got {v}"))?;
        }
        check(three || self.lz == 1.0, "lz", || format!("must be 1 in 2D, got {}", self.lz))?;
        check(self.vf > 0.0 && self.vf < 1.0, "vf", || format!("must lie in (0, 1), got {}", self.vf))?;
        match self.neighborhood {
            NeighborhoodKind::Square => check(self.ls >= 1, "ls", || "must be >= 1".into())?,
            NeighborhoodKind::Circle => check(self.r_min > 0.0 && self.r_min.is_finite(), "r_min", || {
                format!("must be positive, got {}", self.r_min)
            })?,
            NeighborhoodKind::Immediate => {}
        }
        check(self.power_n >= 1, "power_n", || "must be >= 1".into())?;
        check(self.method == MethodKind::Nfp || self.shaping == ShapingKind::Exp, "shaping", || {
            "the projection method has no shaping function; leave `shaping` at exp".into()
        })?;
        check(self.youngs_modulus > 0.0 && self.youngs_modulus.is_finite(), "youngs_modulus", || {
            format!("must be positive, got {}", self.youngs_modulus)
        })?;
        check(self.poisson >= 0.0 && self.poisson < 0.5, "poisson", || {
            format!("must lie in [0, 0.5), got {}", self.poisson)
        })?;
        check(self.penalty >= 1.0 && self.penalty.is_finite(), "penalty", || {
            format!("must be >= 1, got {}", self.penalty)
        })?;
        check(self.rho_min > 0.0 && self.rho_min < 1.0, "rho_min", || {
            format!("must lie in (0, 1), got {}", self.rho_min)
        })?;
        check(self.scale > 0.0 && self.scale.is_finite(), "scale", || format!("must be positive, got {}", self.scale))?;
        check(self.spring >= 0.0 && self.spring.is_finite(), "spring", || {
            format!("must be >= 0, got {}", self.spring)
        })?;
        check(self.step > 0.0 && self.step <= 1.0, "step", || format!("must lie in (0, 1], got {}", self.step))?;
        check(self.max_iter >= 1, "max_iter", || "must be >= 1".into())?;
        check(self.g_tol >= 0.0 && self.g_tol < 1.0, "g_tol", || format!("must lie in [0, 1), got {}", self.g_tol))?;
        check(self.tol_fun >= 0.0 && self.tol_fun.is_finite(), "tol_fun", || {
            format!("must be >= 0, got {}", self.tol_fun)
        })?;
        check(self.beta_max >= 1.0 && self.beta_max.is_finite(), "beta_max", || {
            format!("must be >= 1, got {}", self.beta_max)
        })?;
        check(self.beta_interval >= 1, "beta_interval", || "must be >= 1".into())?;
        check(!self.output_dir.as_os_str().is_empty(), "output_dir", || "must not be empty".into())?;
        Ok(())
    }

    pub fn shaping_function(&self) -> ShapingFunction {
        match self.shaping {
            ShapingKind::Exp => ShapingFunction::Exp,
            ShapingKind::Tanh => ShapingFunction::Tanh,
            ShapingKind::Power => ShapingFunction::Power { n: self.power_n },
            ShapingKind::Atan => ShapingFunction::Atan,
        }
    }

    pub fn neighborhood_shape(&self) -> NeighborhoodShape {
        match self.neighborhood {
            NeighborhoodKind::Square => NeighborhoodShape::Square(self.ls),
            NeighborhoodKind::Circle => NeighborhoodShape::Circle(self.r_min),
            NeighborhoodKind::Immediate => NeighborhoodShape::Immediate,
        }
    }

    pub fn design_method(&self) -> DesignMethod {
        match self.method {
            MethodKind::Nfp => DesignMethod::Nfp { shaping: self.shaping_function() },
            MethodKind::Projection => {
                DesignMethod::Projection { beta_max: self.beta_max, interval: self.beta_interval }
            }
        }
    }

    /// Builds the optimization problem. Validation runs first.
    pub fn problem(&self) -> Result<ProblemSpec, ConfigError> {
        self.validate()?;
        let dim = self.dim();
        let n = dim.n();
        let counts = &self.counts()[..n];
        let h: Vec<f64> = (0..n).map(|a| self.extent()[a] / self.counts()[a] as f64).collect();
        let mesh = build_grid(dim, counts, &h).map_err(|e| ConfigError::invalid("nx", e.to_string()))?;
        let material = MaterialModel::new(self.youngs_modulus, self.poisson, self.penalty, self.rho_min)
            .map_err(|e| ConfigError::invalid("youngs_modulus", e.to_string()))?;
        let loads = self.preset.load_case(&mesh, self.spring);
        let objective = ObjectiveSpec::new(self.preset.objective(), self.scale, self.vf)
            .map_err(|e| ConfigError::invalid("scale", e.to_string()))?;
        let stopping = StoppingRule::new(
            self.max_iter,
            (self.g_tol > 0.0).then_some(self.g_tol),
            (self.tol_fun > 0.0).then_some(self.tol_fun),
        )
        .map_err(|e| ConfigError::invalid("max_iter", e.to_string()))?;
        let spec = ProblemSpec {
            mesh,
            neighborhood: self.neighborhood_shape(),
            method: self.design_method(),
            material,
            loads,
            objective,
            optimizer: OptimizerSettings {
                step: self.step,
                stopping,
                mma: MmaSettings::default(),
                snapshot_every: self.snapshot_every,
            },
            solver: match self.solver {
                SolverChoice::Auto => SolverKind::Auto,
                SolverChoice::Direct => SolverKind::Direct,
                SolverChoice::Cg => SolverKind::ConjugateGradient,
            },
        };
        if spec.objective.kind() == ObjectiveKind::Compliant && !spec.loads.has_dummy() {
            return Err(ConfigError::invalid("preset", "compliant objective without a dummy load"));
        }
        Ok(spec)
    }

    /// TOML text that [`parse_config`] maps back to `self`.
    pub fn to_toml(&self) -> String {
        toml::to_string(&RawConfig::from(self)).expect("plain scalar fields always serialize")
    }
}
