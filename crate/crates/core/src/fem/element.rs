use alloc::format;
use alloc::vec::Vec;

use super::MaterialModel;
use crate::mesh::Dim;
use crate::{Error, Result};

/// Dense symmetric element matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ElementMatrix {
    size: usize,
    data: Vec<f64>,
}

impl ElementMatrix {
    #[inline]
    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.size + c]
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.size..(r + 1) * self.size]
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// `y = K x`.
    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        for (r, yr) in y.iter_mut().enumerate().take(self.size) {
            *yr = crate::math::dot(self.row(r), x);
        }
    }

    /// `aᵀ K b`.
    pub fn bilinear(&self, a: &[f64], b: &[f64]) -> f64 {
        let mut s = 0.0;
        for r in 0..self.size {
            s += a[r] * crate::math::dot(self.row(r), b);
        }
        s
    }

    pub fn scaled(&self, c: f64) -> ElementMatrix {
        ElementMatrix { size: self.size, data: self.data.iter().map(|v| v * c).collect() }
    }
}

const GAUSS: [f64; 2] = [-0.577_350_269_189_625_8, 0.577_350_269_189_625_8];

/// Stiffness of a solid element with edge lengths `h`, integrated with
/// 2-point Gauss rules (exact for rectangular elements).
///
/// Local DOF order is `[u_x, u_y(, u_z)]` per node in the mesh's node order.
pub fn element_stiffness(dim: Dim, material: &MaterialModel, h: [f64; 3]) -> Result<ElementMatrix> {
    let d = dim.n();
    if let Some(a) = (0..d).find(|&a| !(h[a] > 0.0 && h[a].is_finite())) {
        return Err(Error::invalid(format!("degenerate element: edge {a} has length {}", h[a])));
    }
    Ok(match dim {
        Dim::Two => quad4(material, h[0], h[1]),
        Dim::Three => hex8(material, h),
    })
}

fn quad4(m: &MaterialModel, hx: f64, hy: f64) -> ElementMatrix {
    let (e, nu) = (m.youngs_modulus(), m.poisson_ratio());
    let c = e / (1.0 - nu * nu);
    let dmat = [[c, c * nu, 0.0], [c * nu, c, 0.0], [0.0, 0.0, c * (1.0 - nu) / 2.0]];
    let xi_n = [-1.0, 1.0, 1.0, -1.0];
    let eta_n = [-1.0, -1.0, 1.0, 1.0];
    let det = hx * hy / 4.0;
    let mut k = alloc::vec![0.0; 64];
    for &xi in &GAUSS {
        for &eta in &GAUSS {
            let mut b = [[0.0f64; 8]; 3];
            for a in 0..4 {
                let dx = 0.25 * xi_n[a] * (1.0 + eta * eta_n[a]) * 2.0 / hx;
                let dy = 0.25 * eta_n[a] * (1.0 + xi * xi_n[a]) * 2.0 / hy;
                b[0][2 * a] = dx;
                b[1][2 * a + 1] = dy;
                b[2][2 * a] = dy;
                b[2][2 * a + 1] = dx;
            }
            accumulate_btdb(&mut k, &b, &dmat, 8, det);
        }
    }
    let nodes: Vec<[f64; 3]> = (0..4).map(|a| [xi_n[a], eta_n[a], 0.0]).collect();
    mirror_symmetrize(symmetrize(ElementMatrix { size: 8, data: k }), &nodes, 2)
}

fn hex8(m: &MaterialModel, h: [f64; 3]) -> ElementMatrix {
    let (e, nu) = (m.youngs_modulus(), m.poisson_ratio());
    let lam = e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
    let mu = e / (2.0 * (1.0 + nu));
    let mut dmat = [[0.0f64; 6]; 6];
    for i in 0..3 {
        for j in 0..3 {
            dmat[i][j] = lam;
        }
        dmat[i][i] = lam + 2.0 * mu;
        dmat[i + 3][i + 3] = mu;
    }
    let sx = [-1.0, 1.0, 1.0, -1.0, -1.0, 1.0, 1.0, -1.0];
    let sy = [-1.0, -1.0, 1.0, 1.0, -1.0, -1.0, 1.0, 1.0];
    let sz = [-1.0, -1.0, -1.0, -1.0, 1.0, 1.0, 1.0, 1.0];
    let det = h[0] * h[1] * h[2] / 8.0;
    let mut k = alloc::vec![0.0; 576];
    for &xi in &GAUSS {
        for &eta in &GAUSS {
            for &zeta in &GAUSS {
                let mut b = [[0.0f64; 24]; 6];
                for a in 0..8 {
                    let (fx, fy, fz) = (1.0 + xi * sx[a], 1.0 + eta * sy[a], 1.0 + zeta * sz[a]);
                    let dx = 0.125 * sx[a] * fy * fz * 2.0 / h[0];
                    let dy = 0.125 * sy[a] * fx * fz * 2.0 / h[1];
                    let dz = 0.125 * sz[a] * fx * fy * 2.0 / h[2];
                    let c = 3 * a;
                    b[0][c] = dx;
                    b[1][c + 1] = dy;
                    b[2][c + 2] = dz;
                    b[3][c] = dy;
                    b[3][c + 1] = dx;
                    b[4][c + 1] = dz;
                    b[4][c + 2] = dy;
                    b[5][c] = dz;
                    b[5][c + 2] = dx;
                }
                accumulate_btdb(&mut k, &b, &dmat, 24, det);
            }
        }
    }
    let nodes: Vec<[f64; 3]> = (0..8).map(|a| [sx[a], sy[a], sz[a]]).collect();
    mirror_symmetrize(symmetrize(ElementMatrix { size: 24, data: k }), &nodes, 3)
}

fn accumulate_btdb<const R: usize, const C: usize>(
    k: &mut [f64],
    b: &[[f64; C]; R],
    d: &[[f64; R]; R],
    n: usize,
    weight: f64,
) {
    // DB first, then Bᵀ(DB)
    let mut db = [[0.0f64; C]; R];
    for i in 0..R {
        for j in 0..C {
            db[i][j] = (0..R).map(|l| d[i][l] * b[l][j]).sum();
        }
    }
    for r in 0..n {
        for c in 0..n {
            let s: f64 = (0..R).map(|l| b[l][r] * db[l][c]).sum();
            k[r * n + c] += weight * s;
        }
    }
}

fn symmetrize(mut m: ElementMatrix) -> ElementMatrix {
    let n = m.size;
    for r in 0..n {
        for c in r + 1..n {
            let avg = 0.5 * (m.data[r * n + c] + m.data[c * n + r]);
            m.data[r * n + c] = avg;
            m.data[c * n + r] = avg;
        }
    }
    m
}

/// Averages `K` with its reflection across each mid-plane so that mirrored
/// displacement fields give bitwise identical energies.
fn mirror_symmetrize(mut m: ElementMatrix, nodes: &[[f64; 3]], dim: usize) -> ElementMatrix {
    let n = m.size;
    for axis in 0..dim {
        let image = |i: usize| {
            let (a, c) = (i / dim, i % dim);
            let mut target = nodes[a];
            target[axis] = -target[axis];
            let b = nodes.iter().position(|p| *p == target).expect("reflected node exists");
            (b * dim + c, if c == axis { -1.0 } else { 1.0 })
        };
        let map: Vec<(usize, f64)> = (0..n).map(image).collect();
        let old = m.data.clone();
        for r in 0..n {
            for c in 0..n {
                let (pr, sr) = map[r];
                let (pc, sc) = map[c];
                m.data[r * n + c] = 0.5 * (old[r * n + c] + sr * sc * old[pr * n + pc]);
            }
        }
    }
    m
}
