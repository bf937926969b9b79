//! Comparative studies built from several runs of one base configuration.
//!
//! A study file is TOML with a `kind`, study-level lists and a `[base]`
//! table holding run-configuration keys:
//!
//! ```toml
//! kind = "mesh_independence"
//! output_dir = "out/mesh"
//! meshes = [[100, 50], [140, 70], [180, 90]]
//! ls = [2, 3, 4]
//!
//! [base]
//! preset = "cantilever2d"
//! ```
//!
//! Variants run in parallel; each run is deterministic, so reports do not
//! depend on scheduling.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nfptop_core::optimizer::{run, OptimizationTrace, Termination};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{parse_toml, ConfigError, MethodKind, RawConfig, RunConfig, ShapingKind};
use crate::output::{write_outputs, OutputError};
use crate::presets::Preset;

#[derive(Debug, thiserror::Error)]
pub enum StudyError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Output(#[from] OutputError),
    #[error("variant `{label}`: {source}")]
    Run { label: String, source: nfptop_core::Error },
    #[error("invalid study: {0}")]
    Invalid(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyKind {
    MeshIndependence,
    VfLsSweep,
    FunctionChoice,
    StepSize,
    ProjectionCompare,
}

/// Study file contents.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyFile {
    pub kind: StudyKind,
    pub output_dir: Option<PathBuf>,
    /// Element counts per refinement, `[nx, ny]` or `[nx, ny, nz]`.
    #[serde(default)]
    pub meshes: Vec<Vec<usize>>,
    #[serde(default)]
    pub ls: Vec<usize>,
    #[serde(default)]
    pub vf: Vec<f64>,
    #[serde(default)]
    pub shapings: Vec<ShapingKind>,
    #[serde(default)]
    pub steps: Vec<f64>,
    #[serde(default)]
    pub g_tol: Vec<f64>,
    /// Damping factor of the projection run in a projection comparison.
    pub projection_step: Option<f64>,
    pub base: RawConfig,
}

/// A labelled list of run configurations plus the grayness milestones to report.
#[derive(Clone, Debug, PartialEq)]
pub struct StudySpec {
    pub kind: StudyKind,
    pub variants: Vec<(String, RunConfig)>,
    pub g_tols: Vec<f64>,
    pub output_dir: PathBuf,
}

pub fn load_study(path: impl AsRef<Path>) -> Result<StudySpec, StudyError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
    parse_study(&text)
}

pub fn parse_study(text: &str) -> Result<StudySpec, StudyError> {
    let file: StudyFile = parse_toml(text)?;
    file.build()
}

fn invalid(msg: impl Into<String>) -> StudyError {
    StudyError::Invalid(msg.into())
}

impl StudyFile {
    pub fn build(&self) -> Result<StudySpec, StudyError> {
        let base = self.base.resolve()?;
        let with = |label: String, edit: &dyn Fn(&mut RawConfig)| -> Result<(String, RunConfig), StudyError> {
            let mut raw = self.base.clone();
            edit(&mut raw);
            Ok((label, raw.resolve()?))
        };
        let mut variants = Vec::new();
        match self.kind {
            StudyKind::MeshIndependence => {
                if self.meshes.len() != self.ls.len() {
                    return Err(invalid("`meshes` and `ls` must have the same length"));
                }
                for (m, &ls) in self.meshes.iter().zip(&self.ls) {
                    if m.len() != base.dim().n() {
                        return Err(invalid(format!("mesh {m:?} does not match the preset dimension")));
                    }
                    let label = format!("{}_ls{ls}", m.iter().map(|c| c.to_string()).collect::<Vec<_>>().join("x"));
                    variants.push(with(label, &|r| {
                        r.nx = Some(m[0]);
                        r.ny = Some(m[1]);
                        r.nz = m.get(2).copied().or(r.nz);
                        r.lx = Some(base.lx);
                        r.ly = Some(base.ly);
                        r.lz = Some(base.lz);
                        r.ls = Some(ls);
                    })?);
                }
            }
            StudyKind::VfLsSweep => {
                let vfs = if self.vf.is_empty() { vec![base.vf] } else { self.vf.clone() };
                let lss = if self.ls.is_empty() { vec![base.ls] } else { self.ls.clone() };
                for &vf in &vfs {
                    for &ls in &lss {
                        variants.push(with(format!("vf{vf}_ls{ls}"), &|r| {
                            r.vf = Some(vf);
                            r.ls = Some(ls);
                        })?);
                    }
                }
            }
            StudyKind::FunctionChoice => {
                for &s in &self.shapings {
                    variants.push(with(format!("{s:?}").to_lowercase(), &|r| r.shaping = Some(s))?);
                }
            }
            StudyKind::StepSize => {
                for &s in &self.steps {
                    variants.push(with(format!("s{s}"), &|r| r.step = Some(s))?);
                }
            }
            StudyKind::ProjectionCompare => {
                if base.preset != Preset::Midload2d {
                    return Err(invalid("projection comparison is defined on the midload2d preset"));
                }
                variants.push(with("nfp".into(), &|r| {
                    r.method = Some(MethodKind::Nfp);
                    r.shaping = Some(ShapingKind::Exp);
                })?);
                variants.push(with("projection".into(), &|r| {
                    r.method = Some(MethodKind::Projection);
                    r.shaping = Some(ShapingKind::Exp);
                    r.step = self.projection_step;
                })?);
            }
        }
        let spec = StudySpec {
            kind: self.kind,
            variants,
            g_tols: self.g_tol.clone(),
            output_dir: self.output_dir.clone().unwrap_or_else(|| PathBuf::from("out").join("study")),
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl StudySpec {
    pub fn validate(&self) -> Result<(), StudyError> {
        if self.variants.len() < 2 {
            return Err(invalid("a comparative study needs at least two variants"));
        }
        if let Some(g) = self.g_tols.iter().find(|g| !(**g > 0.0 && **g < 1.0)) {
            return Err(invalid(format!("g_tol milestones must lie in (0, 1), got {g}")));
        }
        let mut labels: Vec<_> = self.variants.iter().map(|v| &v.0).collect();
        labels.sort();
        labels.dedup();
        if labels.len() != self.variants.len() {
            return Err(invalid("variant labels must be distinct"));
        }
        Ok(())
    }
}

/// Outcome of one variant.
#[derive(Clone, Debug, PartialEq)]
pub struct VariantRun {
    pub label: String,
    pub config: RunConfig,
    pub trace: OptimizationTrace,
}

/// Scalar results of one variant.
#[derive(Clone, Debug, PartialEq)]
pub struct VariantSummary {
    pub label: String,
    pub iterations: usize,
    pub f0: f64,
    pub g1: f64,
    pub grayness: f64,
    pub min_grayness: f64,
    pub termination: Termination,
    /// First iteration meeting each requested `g_tol`, `None` if never met.
    pub milestones: Vec<(f64, Option<usize>)>,
}

impl VariantSummary {
    pub fn new(run: &VariantRun, g_tols: &[f64]) -> Self {
        let last = run.trace.last();
        VariantSummary {
            label: run.label.clone(),
            iterations: last.iteration,
            f0: last.f0,
            g1: last.g1,
            grayness: last.grayness,
            min_grayness: run.trace.min_grayness(),
            termination: run.trace.termination,
            milestones: g_tols.iter().map(|&g| (g, run.trace.first_reaching(g))).collect(),
        }
    }
}

/// Pairwise Pearson correlation of fields resampled to the coarsest grid.
#[derive(Clone, Debug, PartialEq)]
pub struct MeshComparison {
    pub coarse_counts: [usize; 3],
    pub resampled: Vec<Vec<f64>>,
    pub correlations: Vec<(usize, usize, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StudyReport {
    pub kind: StudyKind,
    pub summaries: Vec<VariantSummary>,
    pub mesh: Option<MeshComparison>,
}

pub fn run_variants(variants: &[(String, RunConfig)]) -> Result<Vec<VariantRun>, StudyError> {
    variants
        .par_iter()
        .map(|(label, config)| {
            let spec = config.problem()?;
            let trace = run(&spec).map_err(|source| StudyError::Run { label: label.clone(), source })?;
            Ok(VariantRun { label: label.clone(), config: config.clone(), trace })
        })
        .collect()
}

/// Runs every variant and builds the report.
pub fn run_study(spec: &StudySpec) -> Result<(StudyReport, Vec<VariantRun>), StudyError> {
    spec.validate()?;
    if spec.kind == StudyKind::MeshIndependence {
        check_same_domain(&spec.variants)?;
    }
    let runs = run_variants(&spec.variants)?;
    let summaries = runs.iter().map(|r| VariantSummary::new(r, &spec.g_tols)).collect();
    let mesh = (spec.kind == StudyKind::MeshIndependence).then(|| compare_meshes(&runs));
    Ok((StudyReport { kind: spec.kind, summaries, mesh }, runs))
}

/// Mesh-independence study over refinements of one physical domain.
pub fn run_mesh_independence(
    base: &RunConfig,
    refinements: &[([usize; 3], usize)],
) -> Result<(StudyReport, Vec<VariantRun>), StudyError> {
    let variants = refinements
        .iter()
        .map(|&(counts, ls)| {
            let mut c = base.clone();
            [c.nx, c.ny, c.nz] = counts;
            c.ls = ls;
            c.validate()?;
            Ok((format!("{}x{}x{}_ls{ls}", counts[0], counts[1], counts[2]), c))
        })
        .collect::<Result<Vec<_>, StudyError>>()?;
    run_study(&StudySpec {
        kind: StudyKind::MeshIndependence,
        variants,
        g_tols: Vec::new(),
        output_dir: base.output_dir.clone(),
    })
}

/// nFP against the Heaviside projection baseline on `problem`.
///
/// The projection run uses `projection_step` as damping factor and the
/// doubling continuation capped at `beta_max`.
pub fn run_projection_compare(
    problem: &RunConfig,
    g_tols: &[f64],
    beta_max: f64,
    projection_step: f64,
) -> Result<(StudyReport, Vec<VariantRun>), StudyError> {
    if problem.preset != Preset::Midload2d {
        return Err(invalid("projection comparison is defined on the midload2d preset"));
    }
    let mut nfp = problem.clone();
    nfp.method = MethodKind::Nfp;
    nfp.shaping = ShapingKind::Exp;
    let mut proj = nfp.clone();
    proj.method = MethodKind::Projection;
    proj.beta_max = beta_max;
    proj.step = projection_step;
    nfp.validate()?;
    proj.validate()?;
    run_study(&StudySpec {
        kind: StudyKind::ProjectionCompare,
        variants: vec![("nfp".into(), nfp), ("projection".into(), proj)],
        g_tols: g_tols.to_vec(),
        output_dir: problem.output_dir.clone(),
    })
}

fn check_same_domain(variants: &[(String, RunConfig)]) -> Result<(), StudyError> {
    let (first, c0) = &variants[0];
    for (label, c) in &variants[1..] {
        if c.extent() != c0.extent() || c.preset != c0.preset {
            return Err(StudyError::Config(ConfigError::Invalid {
                key: "lx",
                message: format!(
                    "variant `{label}` covers {:?} while `{first}` covers {:?}; refinements must share the domain",
                    c.extent(),
                    c0.extent()
                ),
            }));
        }
    }
    Ok(())
}

/// Value of `rho` (on a grid of `counts` over `extent`) at the element
/// containing point `p`.
fn sample(rho: &[f64], counts: [usize; 3], extent: [f64; 3], p: [f64; 3]) -> f64 {
    let idx: Vec<usize> =
        (0..3).map(|a| ((p[a] / extent[a] * counts[a] as f64).floor().max(0.0) as usize).min(counts[a] - 1)).collect();
    rho[idx[0] + counts[0] * (idx[1] + counts[1] * idx[2])]
}

/// Nearest-centroid resampling of `rho` onto a coarser grid of the same extent.
pub fn resample(rho: &[f64], counts: [usize; 3], target: [usize; 3], extent: [f64; 3]) -> Vec<f64> {
    let mut out = Vec::with_capacity(target.iter().product());
    for k in 0..target[2] {
        for j in 0..target[1] {
            for i in 0..target[0] {
                let c = [i, j, k];
                let p: [f64; 3] = std::array::from_fn(|a| (c[a] as f64 + 0.5) * extent[a] / target[a] as f64);
                out.push(sample(rho, counts, extent, p));
            }
        }
    }
    out
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    sab / (saa * sbb).sqrt()
}

fn compare_meshes(runs: &[VariantRun]) -> MeshComparison {
    let coarse = runs
        .iter()
        .map(|r| r.config.counts())
        .min_by_key(|c| c.iter().product::<usize>())
        .expect("at least two variants");
    let resampled: Vec<Vec<f64>> = runs
        .iter()
        .map(|r| resample(r.trace.final_density.values(), r.config.counts(), coarse, r.config.extent()))
        .collect();
    let mut correlations = Vec::new();
    for a in 0..resampled.len() {
        for b in a + 1..resampled.len() {
            correlations.push((a, b, pearson(&resampled[a], &resampled[b])));
        }
    }
    MeshComparison { coarse_counts: coarse, resampled, correlations }
}

fn termination_name(t: Termination) -> &'static str {
    match t {
        Termination::MaxIterations => "max_iter",
        Termination::GraynessReached => "g_tol",
        Termination::ObjectiveStalled => "tol_fun",
        Termination::Observer => "observer",
    }
}

pub fn summary_csv(report: &StudyReport) -> String {
    let tols: Vec<f64> = report.summaries.first().map_or(Vec::new(), |s| s.milestones.iter().map(|m| m.0).collect());
    let mut s = String::from("label,iterations,f0,g1,grayness,min_grayness,termination");
    for g in &tols {
        write!(s, ",iter_g{g}").unwrap();
    }
    s.push('\n');
    for v in &report.summaries {
        write!(
            s,
            "{},{},{:.16e},{:.16e},{:.16e},{:.16e},{}",
            v.label,
            v.iterations,
            v.f0,
            v.g1,
            v.grayness,
            v.min_grayness,
            termination_name(v.termination)
        )
        .unwrap();
        for (_, it) in &v.milestones {
            match it {
                Some(i) => write!(s, ",{i}").unwrap(),
                None => s.push_str(",stuck"),
            }
        }
        s.push('\n');
    }
    s
}

fn write(path: PathBuf, text: &str) -> Result<PathBuf, StudyError> {
    fs::write(&path, text).map_err(|source| OutputError::Io { path: path.clone(), source })?;
    Ok(path)
}

/// Writes each variant's run outputs into `dir/<label>/` plus the study
/// summary, the correlation table (mesh studies) and the resolved study.
pub fn write_study(
    dir: &Path,
    spec: &StudySpec,
    report: &StudyReport,
    runs: &[VariantRun],
) -> Result<Vec<PathBuf>, StudyError> {
    fs::create_dir_all(dir).map_err(|source| OutputError::Io { path: dir.into(), source })?;
    let mut out = Vec::new();
    for r in runs {
        out.extend(write_outputs(&dir.join(&r.label), &r.config, &r.trace)?);
    }
    out.push(write(dir.join("summary.csv"), &summary_csv(report))?);
    if let Some(m) = &report.mesh {
        let mut s = String::from("a,b,pearson\n");
        for (a, b, r) in &m.correlations {
            writeln!(s, "{},{},{r:.16e}", runs[*a].label, runs[*b].label).unwrap();
        }
        out.push(write(dir.join("correlations.csv"), &s)?);
    }
    let mut manifest = format!("kind = \"{:?}\"\n", spec.kind);
    for (label, c) in &spec.variants {
        write!(manifest, "\n[variants.{label}]\n{}", c.to_toml()).unwrap();
    }
    out.push(write(dir.join("study_manifest.toml"), &manifest)?);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mesh_study_keeps_the_domain() {
        let spec = parse_study(
            "kind = \"mesh_independence\"\nmeshes = [[20, 10], [40, 20]]\nls = [1, 2]\n[base]\npreset = \"cantilever2d\"\nnx = 20\nny = 10\n",
        )
        .unwrap();
        assert_eq!(spec.variants.len(), 2);
        assert_eq!(spec.variants[1].1.extent(), [20.0, 10.0, 1.0]);
        assert_eq!(spec.variants[1].1.counts(), [40, 20, 1]);
        assert_eq!(spec.variants[1].0, "40x20_ls2");
    }

    #[test]
    fn inconsistent_domains_are_rejected() {
        let mut a = RunConfig::for_preset(Preset::Cantilever2d);
        a.nx = 8;
        a.ny = 4;
        a.lx = 8.0;
        a.ly = 4.0;
        let mut b = a.clone();
        b.lx = 16.0;
        let spec = StudySpec {
            kind: StudyKind::MeshIndependence,
            variants: vec![("a".into(), a), ("b".into(), b)],
            g_tols: vec![],
            output_dir: "x".into(),
        };
        assert!(matches!(run_study(&spec), Err(StudyError::Config(ConfigError::Invalid { .. }))));
    }

    #[test]
    fn single_variant_is_rejected() {
        let e = parse_study("kind = \"step_size\"\nsteps = [0.1]\n[base]\npreset = \"inverter2d\"\n").unwrap_err();
        assert!(matches!(e, StudyError::Invalid(_)));
        let e = parse_study("kind = \"step_size\"\nsteps = [0.1, 0.2]\nbogus = 1\n[base]\npreset = \"inverter2d\"\n");
        assert!(matches!(e, Err(StudyError::Config(ConfigError::Parse { line: 3, .. }))));
    }

    #[test]
    fn resampling_identity_and_refinement() {
        let rho: Vec<f64> = (0..8).map(|i| i as f64 / 8.0).collect();
        assert_eq!(resample(&rho, [4, 2, 1], [4, 2, 1], [4.0, 2.0, 1.0]), rho);
        // each coarse cell maps onto one of the four fine cells it covers
        let fine: Vec<f64> = (0..32).map(|e| ((e % 8) / 2 + 4 * ((e / 8) / 2)) as f64).collect();
        assert_eq!(resample(&fine, [8, 4, 1], [4, 2, 1], [4.0, 2.0, 1.0]), (0..8).map(f64::from).collect::<Vec<_>>());
    }

    #[test]
    fn pearson_examples() {
        let a = [1.0, 2.0, 3.0, 4.0];
        assert!((pearson(&a, &[2.0, 4.0, 6.0, 8.0]) - 1.0).abs() < 1e-15);
        assert!((pearson(&a, &[4.0, 3.0, 2.0, 1.0]) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn projection_compare_needs_midload() {
        let c = RunConfig::for_preset(Preset::Cantilever2d);
        assert!(matches!(run_projection_compare(&c, &[0.1], 512.0, 0.05), Err(StudyError::Invalid(_))));
    }
}
