//! On-disk results: density CSVs, P2 images, convergence history, manifest.
//!
//! Density grids are written with rows in ascending `y`; images are flipped
//! so that `y` points up when viewed.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use nfptop_core::optimizer::{IterationRecord, OptimizationTrace};

use crate::config::RunConfig;

/// Solid threshold for the voxel list.
pub const SOLID_THRESHOLD: f64 = 0.5;
const PGM_LINE_WIDTH: usize = 70;

#[derive(Debug, thiserror::Error)]
pub enum OutputError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: line {line}: {message}")]
    Format { path: PathBuf, line: usize, message: String },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> OutputError + '_ {
    move |source| OutputError::Io { path: path.to_path_buf(), source }
}

fn write_file(path: &Path, text: &str) -> Result<(), OutputError> {
    fs::write(path, text).map_err(io_err(path))
}

/// Element grid shape `[nx, ny, nz]` of a density vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GridShape(pub [usize; 3]);

impl GridShape {
    fn index(&self, i: usize, j: usize, k: usize) -> usize {
        let [nx, ny, _] = self.0;
        i + nx * (j + ny * k)
    }

    pub fn len(&self) -> usize {
        self.0.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// One slice as CSV: `ny` rows of `nx` values, 17 significant digits.
pub fn density_csv(rho: &[f64], shape: GridShape, k: usize) -> String {
    let [nx, ny, _] = shape.0;
    let mut s = String::with_capacity(nx * ny * 24);
    for j in 0..ny {
        for i in 0..nx {
            if i > 0 {
                s.push(',');
            }
            write!(s, "{:.16e}", rho[shape.index(i, j, k)]).unwrap();
        }
        s.push('\n');
    }
    s
}

/// Parses a slice written by [`density_csv`], returning values in the same
/// element order and the column count.
pub fn read_density_csv(path: &Path) -> Result<(Vec<f64>, usize), OutputError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut values = Vec::new();
    let mut width = None;
    for (n, line) in text.lines().enumerate() {
        let fail = |message: String| OutputError::Format { path: path.to_path_buf(), line: n + 1, message };
        let row = line
            .split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|e| fail(format!("{e}: `{t}`"))))
            .collect::<Result<Vec<_>, _>>()?;
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => return Err(fail(format!("expected {w} columns, found {}", row.len()))),
            _ => {}
        }
        values.extend(row);
    }
    Ok((values, width.unwrap_or(0)))
}

/// Maps a density to a gray level: solid is black, void is white.
pub fn pgm_pixel(rho: f64) -> u8 {
    ((1.0 - rho.clamp(0.0, 1.0)) * 255.0).round() as u8
}

/// One slice as plain P2, top row is the largest `y`.
pub fn density_pgm(rho: &[f64], shape: GridShape, k: usize) -> String {
    let [nx, ny, _] = shape.0;
    let mut s = format!("P2\n{nx} {ny}\n255\n");
    for j in (0..ny).rev() {
        let mut line = String::new();
        for i in 0..nx {
            let px = pgm_pixel(rho[shape.index(i, j, k)]).to_string();
            if !line.is_empty() && line.len() + 1 + px.len() > PGM_LINE_WIDTH {
                s.push_str(&line);
                s.push('\n');
                line.clear();
            }
            if !line.is_empty() {
                line.push(' ');
            }
            line.push_str(&px);
        }
        s.push_str(&line);
        s.push('\n');
    }
    s
}

/// Width, height and pixels of a P2 file; comments (`#`) are skipped.
pub fn read_pgm(path: &Path) -> Result<(usize, usize, Vec<u8>), OutputError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let fail = |message: &str| OutputError::Format { path: path.to_path_buf(), line: 0, message: message.into() };
    let mut tokens = text.lines().map(|l| l.split('#').next().unwrap_or("")).flat_map(str::split_whitespace);
    if tokens.next() != Some("P2") {
        return Err(fail("missing P2 magic"));
    }
    let mut header = [0usize; 3];
    for h in &mut header {
        *h = tokens.next().and_then(|t| t.parse().ok()).ok_or_else(|| fail("bad header"))?;
    }
    let [w, h, max] = header;
    let px = tokens
        .map(|t| t.parse::<usize>().ok().filter(|&v| v <= max).map(|v| v as u8))
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| fail("bad pixel value"))?;
    if px.len() != w * h {
        return Err(fail("pixel count does not match the header"));
    }
    Ok((w, h, px))
}

pub fn history_csv(history: &[IterationRecord]) -> String {
    let mut s = String::from("iter,f0,g1,grayness\n");
    for r in history {
        writeln!(s, "{},{:.16e},{:.16e},{:.16e}", r.iteration, r.f0, r.g1, r.grayness).unwrap();
    }
    s
}

/// `i,j,k,rho` for every element with `ρ ≥ 0.5`.
pub fn solid_voxels_csv(rho: &[f64], shape: GridShape) -> String {
    let [nx, ny, nz] = shape.0;
    let mut s = String::from("i,j,k,rho\n");
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let r = rho[shape.index(i, j, k)];
                if r >= SOLID_THRESHOLD {
                    writeln!(s, "{i},{j},{k},{r:.16e}").unwrap();
                }
            }
        }
    }
    s
}

/// Writes a density field as `<stem>.csv`/`<stem>.pgm` in 2D or one
/// `<stem>_zNNN` pair per slice in 3D.
fn write_density(
    dir: &Path,
    stem: &str,
    rho: &[f64],
    shape: GridShape,
    out: &mut Vec<PathBuf>,
) -> Result<(), OutputError> {
    let nz = shape.0[2];
    for k in 0..nz {
        let name = if nz == 1 { stem.to_string() } else { format!("{stem}_z{k:03}") };
        for (ext, text) in [("csv", density_csv(rho, shape, k)), ("pgm", density_pgm(rho, shape, k))] {
            let path = dir.join(format!("{name}.{ext}"));
            write_file(&path, &text)?;
            out.push(path);
        }
    }
    Ok(())
}

/// Writes every run artifact into `dir` and returns the written paths.
pub fn write_outputs(dir: &Path, config: &RunConfig, trace: &OptimizationTrace) -> Result<Vec<PathBuf>, OutputError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let shape = GridShape(config.counts());
    let mut out = Vec::new();
    write_density(dir, "density_final", trace.final_density.values(), shape, &mut out)?;

    let path = dir.join("history.csv");
    write_file(&path, &history_csv(&trace.history))?;
    out.push(path);

    let path = dir.join("manifest.toml");
    write_file(&path, &config.to_toml())?;
    out.push(path);

    if config.dim().n() == 3 {
        let path = dir.join("solid_voxels.csv");
        write_file(&path, &solid_voxels_csv(trace.final_density.values(), shape))?;
        out.push(path);
    }

    if !trace.snapshots.is_empty() {
        let snap_dir = dir.join("snapshots");
        fs::create_dir_all(&snap_dir).map_err(io_err(&snap_dir))?;
        for s in &trace.snapshots {
            write_density(&snap_dir, &format!("density_{:05}", s.iteration), &s.density, shape, &mut out)?;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pixel_mapping() {
        assert_eq!(pgm_pixel(1.0), 0);
        assert_eq!(pgm_pixel(0.0), 255);
        assert_eq!(pgm_pixel(0.5), 128);
    }

    #[test]
    fn pgm_is_upright_and_wrapped() {
        let shape = GridShape([40, 2, 1]);
        let mut rho = vec![0.0; 80];
        rho[0] = 1.0; // bottom-left
        let text = density_pgm(&rho, shape, 0);
        assert!(text.lines().all(|l| l.len() <= PGM_LINE_WIDTH));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.pgm");
        fs::write(&path, &text).unwrap();
        let (w, h, px) = read_pgm(&path).unwrap();
        assert_eq!((w, h), (40, 2));
        assert_eq!(px[40], 0);
        assert!(px[..40].iter().all(|&p| p == 255));
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let shape = GridShape([3, 2, 2]);
        let rho: Vec<f64> = (0..12).map(|i| (i as f64 * 0.7311).sin().abs() / 3.0).collect();
        let dir = tempfile::tempdir().unwrap();
        let mut back = Vec::new();
        for k in 0..2 {
            let path = dir.path().join(format!("{k}.csv"));
            fs::write(&path, density_csv(&rho, shape, k)).unwrap();
            let (v, w) = read_density_csv(&path).unwrap();
            assert_eq!(w, 3);
            back.extend(v);
        }
        assert_eq!(back, rho);
    }

    #[test]
    fn voxels_use_threshold() {
        let text = solid_voxels_csv(&[0.2, 0.5, 0.9, 0.49], GridShape([2, 1, 2]));
        let rows: Vec<_> = text.lines().skip(1).map(|l| l.split(',').take(3).collect::<Vec<_>>().join(",")).collect();
        assert_eq!(rows, ["1,0,0", "0,0,1"]);
    }
}
