//! Named benchmark problems.
//!
//! All presets use unit loads and unit element edges by default. Symmetric
//! problems are posed on the reduced domain with roller conditions on the
//! symmetry planes.

use std::fmt;
use std::str::FromStr;

use nfptop_core::fem::LoadCase;
use nfptop_core::mesh::{Dim, GridMesh};
use nfptop_core::objectives::ObjectiveKind;
use serde::{Deserialize, Serialize};

use crate::config::{NeighborhoodKind, RunConfig};

/// Default output and input spring stiffness of the inverter presets.
pub const DEFAULT_SPRING: f64 = 100.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Cantilever2d,
    Midload2d,
    Inverter2d,
    Cantilever3d,
    Mbb3d,
    Inverter3d,
}

impl Preset {
    pub const ALL: [Preset; 6] = [
        Preset::Cantilever2d,
        Preset::Midload2d,
        Preset::Inverter2d,
        Preset::Cantilever3d,
        Preset::Mbb3d,
        Preset::Inverter3d,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Cantilever2d => "cantilever2d",
            Preset::Midload2d => "midload2d",
            Preset::Inverter2d => "inverter2d",
            Preset::Cantilever3d => "cantilever3d",
            Preset::Mbb3d => "mbb3d",
            Preset::Inverter3d => "inverter3d",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Preset::Cantilever2d => "cantilever, left edge clamped, downward tip load at mid-height of the right edge",
            Preset::Midload2d => {
                "mid-load beam, right half: symmetry rollers on the left edge, downward load at the \
                 top-left corner, vertical roller at the bottom-right corner"
            }
            Preset::Inverter2d => {
                "displacement inverter, top half: symmetry rollers on the bottom edge, top-left corner \
                 clamped, input +x at the bottom-left with spring, output spring and dummy load -x at \
                 the bottom-right"
            }
            Preset::Cantilever3d => {
                "3D cantilever, full domain: x = 0 face clamped, downward line load along z at \
                 mid-height of the free end"
            }
            Preset::Mbb3d => {
                "3D MBB beam, half domain: symmetry on x = 0, downward line load along the top edge \
                 of the symmetry face, pinned line support at the bottom of the far end"
            }
            Preset::Inverter3d => {
                "3D displacement inverter, quarter domain: symmetry on y = 0 and z = 0, upper part \
                 of the x = 0 face clamped, input +x and output -x on the symmetry axis"
            }
        }
    }

    pub fn dim(self) -> Dim {
        match self {
            Preset::Cantilever2d | Preset::Midload2d | Preset::Inverter2d => Dim::Two,
            _ => Dim::Three,
        }
    }

    /// Element counts; the `z` entry is 1 in 2D.
    pub fn default_counts(self) -> [usize; 3] {
        match self {
            Preset::Cantilever2d | Preset::Inverter2d => [120, 60, 1],
            Preset::Midload2d => [120, 40, 1],
            Preset::Cantilever3d | Preset::Inverter3d => [80, 40, 40],
            Preset::Mbb3d => [90, 30, 30],
        }
    }

    pub fn default_volume_fraction(self) -> f64 {
        match self {
            Preset::Cantilever2d | Preset::Midload2d => 0.35,
            Preset::Inverter2d => 0.2,
            Preset::Cantilever3d | Preset::Mbb3d => 0.25,
            Preset::Inverter3d => 0.15,
        }
    }

    pub fn default_neighborhood(self) -> NeighborhoodKind {
        match self.dim() {
            Dim::Two => NeighborhoodKind::Square,
            Dim::Three => NeighborhoodKind::Immediate,
        }
    }

    pub fn default_max_iter(self) -> usize {
        match self {
            Preset::Cantilever3d => 2500,
            Preset::Mbb3d => 3000,
            Preset::Inverter3d => 1600,
            _ => 1000,
        }
    }

    pub fn objective(self) -> ObjectiveKind {
        match self {
            Preset::Inverter2d | Preset::Inverter3d => ObjectiveKind::Compliant,
            _ => ObjectiveKind::Stiff,
        }
    }

    /// Supports, loads, springs and dummy loads on `mesh`.
    ///
    /// `spring` is the stiffness used at the input and output ports of the
    /// inverters; stiff presets ignore it.
    pub fn load_case(self, mesh: &GridMesh, spring: f64) -> LoadCase {
        let [nx, ny, nz] = mesh.counts();
        let mut lc = LoadCase::new();
        let node = |i, j, k| mesh.node_index(i, j, k);
        let dof = |n, c| mesh.dof(n, c);
        match self {
            Preset::Cantilever2d => {
                for j in 0..=ny {
                    lc.fix_all([dof(node(0, j, 0), 0), dof(node(0, j, 0), 1)]);
                }
                lc.load(dof(node(nx, ny / 2, 0), 1), -1.0);
            }
            Preset::Midload2d => {
                for j in 0..=ny {
                    lc.fix(dof(node(0, j, 0), 0));
                }
                lc.fix(dof(node(nx, 0, 0), 1));
                lc.load(dof(node(0, ny, 0), 1), -1.0);
            }
            Preset::Inverter2d => {
                for i in 0..=nx {
                    lc.fix(dof(node(i, 0, 0), 1));
                }
                for j in clamp_rows(ny) {
                    lc.fix_all([dof(node(0, j, 0), 0), dof(node(0, j, 0), 1)]);
                }
                let input = dof(node(0, 0, 0), 0);
                let output = dof(node(nx, 0, 0), 0);
                lc.load(input, 1.0).spring(input, spring).spring(output, spring).dummy_load(output, -1.0);
            }
            Preset::Cantilever3d => {
                for k in 0..=nz {
                    for j in 0..=ny {
                        let n = node(0, j, k);
                        lc.fix_all((0..3).map(|c| dof(n, c)));
                    }
                }
                let share = 1.0 / (nz + 1) as f64;
                for k in 0..=nz {
                    lc.load(dof(node(nx, ny / 2, k), 1), -share);
                }
            }
            Preset::Mbb3d => {
                for k in 0..=nz {
                    for j in 0..=ny {
                        lc.fix(dof(node(0, j, k), 0));
                    }
                }
                let share = 1.0 / (nz + 1) as f64;
                for k in 0..=nz {
                    let support = node(nx, 0, k);
                    lc.fix_all([dof(support, 1), dof(support, 2)]);
                    lc.load(dof(node(0, ny, k), 1), -share);
                }
            }
            Preset::Inverter3d => {
                for k in 0..=nz {
                    for i in 0..=nx {
                        lc.fix(dof(node(i, 0, k), 1));
                    }
                }
                for j in 0..=ny {
                    for i in 0..=nx {
                        lc.fix(dof(node(i, j, 0), 2));
                    }
                }
                for k in 0..=nz {
                    for j in clamp_rows(ny) {
                        let n = node(0, j, k);
                        lc.fix_all((0..3).map(|c| dof(n, c)));
                    }
                }
                let input = dof(node(0, 0, 0), 0);
                let output = dof(node(nx, 0, 0), 0);
                lc.load(input, 1.0).spring(input, spring).spring(output, spring).dummy_load(output, -1.0);
            }
        }
        lc
    }

    /// The preset with every other setting at its default.
    pub fn default_config(self) -> RunConfig {
        RunConfig::for_preset(self)
    }
}

/// Node rows clamped on the left edge of the inverters: the top twelfth.
fn clamp_rows(ny: usize) -> std::ops::RangeInclusive<usize> {
    ny - (ny / 12).max(1).min(ny)..=ny
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Preset::ALL.into_iter().find(|p| p.name() == s).ok_or_else(|| format!("unknown preset `{s}`"))
    }
}

/// Every preset with its default problem definition.
pub fn presets() -> Vec<(Preset, nfptop_core::optimizer::ProblemSpec)> {
    Preset::ALL.into_iter().map(|p| (p, p.default_config().problem().expect("preset defaults are valid"))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nfptop_core::mesh::build_grid;

    #[test]
    fn names_round_trip() {
        for p in Preset::ALL {
            assert_eq!(p.name().parse::<Preset>().unwrap(), p);
        }
        assert!("bridge".parse::<Preset>().is_err());
    }

    #[test]
    fn inverter_output_opposes_input() {
        let mesh = build_grid(Dim::Two, &[12, 6], &[1.0, 1.0]).unwrap();
        let lc = Preset::Inverter2d.load_case(&mesh, DEFAULT_SPRING);
        let (din, fin) = lc.loads()[0];
        let (dout, fout) = lc.dummy_loads()[0];
        assert_eq!(din % 2, 0);
        assert_eq!(dout % 2, 0);
        assert!(fin * fout < 0.0);
        assert_eq!(lc.springs().len(), 2);
    }

    #[test]
    fn load_cases_are_valid() {
        for p in Preset::ALL {
            let counts: Vec<usize> = match p.dim() {
                Dim::Two => vec![6, 4],
                Dim::Three => vec![6, 4, 4],
            };
            let h = vec![1.0; counts.len()];
            let mesh = build_grid(p.dim(), &counts, &h).unwrap();
            let lc = p.load_case(&mesh, DEFAULT_SPRING);
            lc.validate(mesh.dof_count()).unwrap();
            assert!(!lc.loads().is_empty(), "{p}");
            assert_eq!(lc.has_dummy(), p.objective() == ObjectiveKind::Compliant);
        }
    }

    #[test]
    fn line_loads_sum_to_one() {
        let mesh = build_grid(Dim::Three, &[6, 4, 4], &[1.0; 3]).unwrap();
        for p in [Preset::Cantilever3d, Preset::Mbb3d] {
            let total: f64 = p.load_case(&mesh, 0.0).loads().iter().map(|l| l.1).sum();
            assert!((total + 1.0).abs() < 1e-15);
        }
    }
}
