use alloc::format;
use alloc::vec::Vec;

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Dim {
    Two,
    Three,
}

impl Dim {
    pub fn from_usize(d: usize) -> Result<Self> {
        match d {
            2 => Ok(Dim::Two),
            3 => Ok(Dim::Three),
            _ => Err(Error::invalid(format!("dimension must be 2 or 3, got {d}"))),
        }
    }

    #[inline]
    pub fn n(self) -> usize {
        match self {
            Dim::Two => 2,
            Dim::Three => 3,
        }
    }

    /// Nodes per element: 4-node quads in 2D, 8-node hexes in 3D.
    #[inline]
    pub fn nodes_per_element(self) -> usize {
        match self {
            Dim::Two => 4,
            Dim::Three => 8,
        }
    }

    #[inline]
    pub fn dofs_per_element(self) -> usize {
        self.n() * self.nodes_per_element()
    }
}

/// Uniform structured mesh of bilinear quads (2D) or trilinear hexes (3D).
///
/// In 2D the `z` entries of counts and lengths are 1 and all `z` coordinates
/// are zero, so index arithmetic is shared between both dimensions.
#[derive(Clone, Debug, PartialEq)]
pub struct GridMesh {
    dim: Dim,
    counts: [usize; 3],
    h: [f64; 3],
    coords: Vec<[f64; 3]>,
    connectivity: Vec<usize>,
    element_dofs: Vec<usize>,
    centroids: Vec<[f64; 3]>,
    measures: Vec<f64>,
}

/// Builds a uniform grid with `counts[a]` elements of edge length
/// `edge_lengths[a]` along each axis.
pub fn build_grid(dim: Dim, counts: &[usize], edge_lengths: &[f64]) -> Result<GridMesh> {
    let d = dim.n();
    if counts.len() != d || edge_lengths.len() != d {
        return Err(Error::invalid(format!(
            "expected {d} counts and edge lengths, got {} and {}",
            counts.len(),
            edge_lengths.len()
        )));
    }
    if let Some(a) = counts.iter().position(|&c| c == 0) {
        return Err(Error::invalid(format!("element count along axis {a} must be >= 1")));
    }
    if let Some(a) = edge_lengths.iter().position(|&h| !(h > 0.0 && h.is_finite())) {
        return Err(Error::invalid(format!(
            "edge length along axis {a} must be positive and finite, got {}",
            edge_lengths[a]
        )));
    }

    let mut n = [1usize; 3];
    let mut h = [1.0f64; 3];
    n[..d].copy_from_slice(counts);
    h[..d].copy_from_slice(edge_lengths);
    if dim == Dim::Two {
        // unit thickness
        h[2] = 1.0;
    }

    let nn = [n[0] + 1, n[1] + 1, if dim == Dim::Three { n[2] + 1 } else { 1 }];
    let mut coords = Vec::with_capacity(nn[0] * nn[1] * nn[2]);
    for k in 0..nn[2] {
        for j in 0..nn[1] {
            for i in 0..nn[0] {
                let z = if dim == Dim::Three { k as f64 * h[2] } else { 0.0 };
                coords.push([i as f64 * h[0], j as f64 * h[1], z]);
            }
        }
    }

    let node = |i: usize, j: usize, k: usize| i + nn[0] * (j + nn[1] * k);
    let npe = dim.nodes_per_element();
    let ne = n[0] * n[1] * n[2];
    let mut connectivity = Vec::with_capacity(ne * npe);
    let mut centroids = Vec::with_capacity(ne);
    for k in 0..n[2] {
        for j in 0..n[1] {
            for i in 0..n[0] {
                // Counter-clockwise in the xy plane; 3D adds the top face in the same order.
                connectivity.extend_from_slice(&[
                    node(i, j, k),
                    node(i + 1, j, k),
                    node(i + 1, j + 1, k),
                    node(i, j + 1, k),
                ]);
                if dim == Dim::Three {
                    connectivity.extend_from_slice(&[
                        node(i, j, k + 1),
                        node(i + 1, j, k + 1),
                        node(i + 1, j + 1, k + 1),
                        node(i, j + 1, k + 1),
                    ]);
                }
                let cz = if dim == Dim::Three { (k as f64 + 0.5) * h[2] } else { 0.0 };
                centroids.push([(i as f64 + 0.5) * h[0], (j as f64 + 0.5) * h[1], cz]);
            }
        }
    }

    let mut element_dofs = Vec::with_capacity(ne * dim.dofs_per_element());
    for &nd in &connectivity {
        for c in 0..d {
            element_dofs.push(nd * d + c);
        }
    }

    let measure = h[0] * h[1] * h[2];
    Ok(GridMesh {
        dim,
        counts: n,
        h,
        coords,
        connectivity,
        element_dofs,
        centroids,
        measures: alloc::vec![measure; ne],
    })
}

impl GridMesh {
    #[inline]
    pub fn dim(&self) -> Dim {
        self.dim
    }

    /// Element counts per axis; `counts()[2] == 1` in 2D.
    #[inline]
    pub fn counts(&self) -> [usize; 3] {
        self.counts
    }

    /// Element edge lengths per axis.
    #[inline]
    pub fn edge_lengths(&self) -> [f64; 3] {
        self.h
    }

    /// Node counts per axis; `node_counts()[2] == 1` in 2D.
    pub fn node_counts(&self) -> [usize; 3] {
        let nz = if self.dim == Dim::Three { self.counts[2] + 1 } else { 1 };
        [self.counts[0] + 1, self.counts[1] + 1, nz]
    }

    /// Physical extent of the domain along each axis.
    pub fn extent(&self) -> [f64; 3] {
        [
            self.counts[0] as f64 * self.h[0],
            self.counts[1] as f64 * self.h[1],
            if self.dim == Dim::Three { self.counts[2] as f64 * self.h[2] } else { 0.0 },
        ]
    }

    #[inline]
    pub fn element_count(&self) -> usize {
        self.measures.len()
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.coords.len()
    }

    #[inline]
    pub fn dof_count(&self) -> usize {
        self.coords.len() * self.dim.n()
    }

    #[inline]
    pub fn element_index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.counts[0] * (j + self.counts[1] * k)
    }

    #[inline]
    pub fn element_ijk(&self, e: usize) -> [usize; 3] {
        let i = e % self.counts[0];
        let r = e / self.counts[0];
        [i, r % self.counts[1], r / self.counts[1]]
    }

    #[inline]
    pub fn node_index(&self, i: usize, j: usize, k: usize) -> usize {
        let nn = self.node_counts();
        i + nn[0] * (j + nn[1] * k)
    }

    #[inline]
    pub fn node_ijk(&self, n: usize) -> [usize; 3] {
        let nn = self.node_counts();
        let i = n % nn[0];
        let r = n / nn[0];
        [i, r % nn[1], r / nn[1]]
    }

    /// Global DOF of displacement component `comp` (0 = x, 1 = y, 2 = z) at `node`.
    #[inline]
    pub fn dof(&self, node: usize, comp: usize) -> usize {
        debug_assert!(comp < self.dim.n());
        node * self.dim.n() + comp
    }

    #[inline]
    pub fn node_coords(&self, n: usize) -> [f64; 3] {
        self.coords[n]
    }

    #[inline]
    pub fn element_nodes(&self, e: usize) -> &[usize] {
        let npe = self.dim.nodes_per_element();
        &self.connectivity[e * npe..(e + 1) * npe]
    }

    /// Global DOFs of element `e` in the local ordering of the element matrix.
    #[inline]
    pub fn element_dofs(&self, e: usize) -> &[usize] {
        let k = self.dim.dofs_per_element();
        &self.element_dofs[e * k..(e + 1) * k]
    }

    #[inline]
    pub fn centroid(&self, e: usize) -> [f64; 3] {
        self.centroids[e]
    }

    /// Element area (2D) or volume (3D).
    #[inline]
    pub fn measure(&self, e: usize) -> f64 {
        self.measures[e]
    }

    #[inline]
    pub fn measures(&self) -> &[f64] {
        &self.measures
    }

    pub fn total_measure(&self) -> f64 {
        self.measures.iter().sum()
    }
}
