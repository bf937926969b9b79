use alloc::format;
use alloc::vec::Vec;

use super::{Dim, GridMesh};
use crate::math::CompensatedSum;
use crate::{Error, Result};

/// Shape of the region `Γ_i` that defines the neighbor set `N_i`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NeighborhoodShape {
    /// All elements within Chebyshev distance `ls` in index space, i.e. a
    /// `(2 ls + 1)^dim` block for interior elements.
    Square(usize),
    /// All elements whose centroid lies within Euclidean distance `r_min`
    /// (length units, boundary inclusive).
    Circle(f64),
    /// The element and every element sharing at least one node with it.
    Immediate,
}

/// Per-element neighbor lists with normalized exponents
/// `w_ij = A(Ω_j) / A(Γ_i)`, stored in compressed rows, plus the transposed
/// (reverse) adjacency used by the chain rule.
#[derive(Clone, Debug, PartialEq)]
pub struct NeighborhoodTable {
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
    weights: Vec<f64>,
    measures: Vec<f64>,
    rev_offsets: Vec<usize>,
    rev_elements: Vec<usize>,
    rev_weights: Vec<f64>,
}

pub fn build_neighborhoods(mesh: &GridMesh, shape: NeighborhoodShape) -> Result<NeighborhoodTable> {
    let h = mesh.edge_lengths();
    let counts = mesh.counts();
    let three = mesh.dim() == Dim::Three;

    // Half-width of the index box to scan on each axis.
    let reach: [usize; 3] = match shape {
        NeighborhoodShape::Square(ls) => [ls, ls, if three { ls } else { 0 }],
        NeighborhoodShape::Immediate => [1, 1, if three { 1 } else { 0 }],
        NeighborhoodShape::Circle(r) => {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::invalid(format!("circle radius must be positive, got {r}")));
            }
            let k = |a: usize| libm::floor(r / h[a] * (1.0 + 1e-12)) as usize;
            [k(0), k(1), if three { k(2) } else { 0 }]
        }
    };
    let radius_sq = match shape {
        NeighborhoodShape::Circle(r) => Some(r * r * (1.0 + 1e-12)),
        _ => None,
    };

    let ne = mesh.element_count();
    let mut offsets = Vec::with_capacity(ne + 1);
    let mut neighbors = Vec::new();
    let mut weights = Vec::new();
    let mut measures = Vec::with_capacity(ne);
    offsets.push(0);

    for e in 0..ne {
        let [i, j, k] = mesh.element_ijk(e);
        let lo = |c: usize, a: usize| c.saturating_sub(reach[a]);
        let hi = |c: usize, a: usize| (c + reach[a]).min(counts[a] - 1);
        let start = neighbors.len();
        for kk in lo(k, 2)..=hi(k, 2) {
            for jj in lo(j, 1)..=hi(j, 1) {
                for ii in lo(i, 0)..=hi(i, 0) {
                    if let Some(r2) = radius_sq {
                        let dx = (ii as f64 - i as f64) * h[0];
                        let dy = (jj as f64 - j as f64) * h[1];
                        let dz = (kk as f64 - k as f64) * h[2];
                        if dx * dx + dy * dy + dz * dz > r2 {
                            continue;
                        }
                    }
                    neighbors.push(mesh.element_index(ii, jj, kk));
                }
            }
        }
        let mut total = CompensatedSum::default();
        for &n in &neighbors[start..] {
            total.add(mesh.measure(n));
        }
        let total = total.value();
        weights.extend(neighbors[start..].iter().map(|&n| mesh.measure(n) / total));
        measures.push(total);
        offsets.push(neighbors.len());
    }

    // Transpose. Forward rows are visited in increasing i, so each reverse row
    // comes out sorted.
    let mut rev_offsets = alloc::vec![0usize; ne + 1];
    for &n in &neighbors {
        rev_offsets[n + 1] += 1;
    }
    for e in 0..ne {
        rev_offsets[e + 1] += rev_offsets[e];
    }
    let mut fill = rev_offsets.clone();
    let mut rev_elements = alloc::vec![0usize; neighbors.len()];
    let mut rev_weights = alloc::vec![0.0f64; neighbors.len()];
    for i in 0..ne {
        for p in offsets[i]..offsets[i + 1] {
            let j = neighbors[p];
            rev_elements[fill[j]] = i;
            rev_weights[fill[j]] = weights[p];
            fill[j] += 1;
        }
    }

    Ok(NeighborhoodTable { offsets, neighbors, weights, measures, rev_offsets, rev_elements, rev_weights })
}

impl NeighborhoodTable {
    /// Number of elements (rows).
    #[inline]
    pub fn len(&self) -> usize {
        self.measures.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.measures.is_empty()
    }

    /// `N_i`, sorted ascending.
    #[inline]
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[self.offsets[i]..self.offsets[i + 1]]
    }

    /// Exponents `w_ij`, aligned with [`neighbors`](Self::neighbors).
    #[inline]
    pub fn weights(&self, i: usize) -> &[f64] {
        &self.weights[self.offsets[i]..self.offsets[i + 1]]
    }

    /// `|N_i|`.
    #[inline]
    pub fn size(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    pub fn max_size(&self) -> usize {
        (0..self.len()).map(|i| self.size(i)).max().unwrap_or(0)
    }

    /// `A(Γ_i)`, the summed measure of the neighbor elements.
    #[inline]
    pub fn measure(&self, i: usize) -> f64 {
        self.measures[i]
    }

    /// Elements `i` with `j ∈ N_i`, ascending.
    #[inline]
    pub fn incident(&self, j: usize) -> &[usize] {
        &self.rev_elements[self.rev_offsets[j]..self.rev_offsets[j + 1]]
    }

    /// `w_ij` for each `i` in [`incident(j)`](Self::incident).
    #[inline]
    pub fn incident_weights(&self, j: usize) -> &[f64] {
        &self.rev_weights[self.rev_offsets[j]..self.rev_offsets[j + 1]]
    }

    /// Looks up `w_ij`, zero when `j ∉ N_i`.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        match self.neighbors(i).binary_search(&j) {
            Ok(p) => self.weights(i)[p],
            Err(_) => 0.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_grid;

    fn grid2(nx: usize, ny: usize) -> GridMesh {
        build_grid(Dim::Two, &[nx, ny], &[1.0, 1.0]).unwrap()
    }

    #[test]
    fn square_block_sizes() {
        let m = grid2(12, 12);
        let t1 = build_neighborhoods(&m, NeighborhoodShape::Square(1)).unwrap();
        let t4 = build_neighborhoods(&m, NeighborhoodShape::Square(4)).unwrap();
        let c = m.element_index(6, 6, 0);
        assert_eq!(t1.size(c), 9);
        assert_eq!(t4.size(c), 81);
        assert_eq!(t1.size(0), 4);
        assert!(t1.weights(0).iter().all(|&w| w == 0.25));
        let t2 = build_neighborhoods(&m, NeighborhoodShape::Square(2)).unwrap();
        assert_eq!(t2.size(c), 25);
    }

    #[test]
    fn zero_ls_is_self_only() {
        let m = grid2(3, 3);
        let t = build_neighborhoods(&m, NeighborhoodShape::Square(0)).unwrap();
        for i in 0..m.element_count() {
            assert_eq!(t.neighbors(i), &[i]);
            assert_eq!(t.weights(i), &[1.0]);
        }
    }

    #[test]
    fn circle_and_immediate() {
        let m = grid2(9, 9);
        let c = m.element_index(4, 4, 0);
        let t = build_neighborhoods(&m, NeighborhoodShape::Circle(2.0)).unwrap();
        // lattice points with x^2 + y^2 <= 4
        assert_eq!(t.size(c), 13);
        let t = build_neighborhoods(&m, NeighborhoodShape::Circle(1.5)).unwrap();
        assert_eq!(t.size(c), 9);
        let t = build_neighborhoods(&m, NeighborhoodShape::Immediate).unwrap();
        assert_eq!(t.size(c), 9);
        assert!(t.neighbors(c).contains(&c));

        let m3 = build_grid(Dim::Three, &[3, 3, 3], &[1.0; 3]).unwrap();
        let t = build_neighborhoods(&m3, NeighborhoodShape::Immediate).unwrap();
        assert_eq!(t.size(m3.element_index(1, 1, 1)), 27);
        assert_eq!(t.size(0), 8);
    }

    #[test]
    fn rejects_bad_radius() {
        let m = grid2(2, 2);
        for r in [0.0, -1.0, f64::NAN] {
            assert!(matches!(build_neighborhoods(&m, NeighborhoodShape::Circle(r)), Err(Error::InvalidArgument(_))));
        }
    }

    #[test]
    fn weights_normalized_self_included_and_reverse_is_transpose() {
        let m = build_grid(Dim::Two, &[7, 5], &[0.3, 0.7]).unwrap();
        for shape in [NeighborhoodShape::Square(2), NeighborhoodShape::Circle(1.0), NeighborhoodShape::Immediate] {
            let t = build_neighborhoods(&m, shape).unwrap();
            let mut forward = alloc::vec::Vec::new();
            for i in 0..t.len() {
                let s: f64 = t.weights(i).iter().sum();
                assert!((s - 1.0).abs() < 1e-12);
                assert!(t.neighbors(i).contains(&i));
                for (&j, &w) in t.neighbors(i).iter().zip(t.weights(i)) {
                    forward.push((i, j, w));
                }
            }
            let mut reverse = alloc::vec::Vec::new();
            for j in 0..t.len() {
                for (&i, &w) in t.incident(j).iter().zip(t.incident_weights(j)) {
                    reverse.push((i, j, w));
                }
            }
            reverse.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
            assert_eq!(forward, reverse);
        }
    }

    #[test]
    fn refinement_keeps_physical_extent() {
        // Doubling resolution together with ls keeps the centroid extent of
        // interior neighborhoods.
        let extent = |n: usize, h: f64, ls: usize| {
            let m = build_grid(Dim::Two, &[n, n], &[h, h]).unwrap();
            let t = build_neighborhoods(&m, NeighborhoodShape::Square(ls)).unwrap();
            let e = m.element_index(n / 2, n / 2, 0);
            let (mut lo, mut hi) = ([f64::MAX; 2], [f64::MIN; 2]);
            for &j in t.neighbors(e) {
                let c = m.centroid(j);
                for a in 0..2 {
                    lo[a] = lo[a].min(c[a]);
                    hi[a] = hi[a].max(c[a]);
                }
            }
            [hi[0] - lo[0], hi[1] - lo[1]]
        };
        assert_eq!(extent(10, 1.0, 1), [2.0, 2.0]);
        assert_eq!(extent(20, 0.5, 2), [2.0, 2.0]);
        assert_eq!(extent(40, 0.25, 4), [2.0, 2.0]);
    }
}
