//! Randomized invariants of the density map, damping and mesh.

use nfptop_core::density::{evaluate_density, grayness, normalized_field_product, DesignField, ShapingFunction};
use nfptop_core::mesh::{build_grid, build_neighborhoods, Dim, NeighborhoodShape};
use nfptop_core::optimizer::apply_step_damping;
use proptest::prelude::*;

fn shapings() -> impl Strategy<Value = ShapingFunction> {
    prop_oneof![
        Just(ShapingFunction::Exp),
        Just(ShapingFunction::Tanh),
        Just(ShapingFunction::Power { n: ShapingFunction::DEFAULT_POWER }),
        Just(ShapingFunction::Atan),
    ]
}

proptest! {
    #[test]
    fn field_product_is_a_mean(
        pairs in prop::collection::vec((1e-6f64..1.0, 0.1f64..10.0), 1..20),
        scale in 0.01f64..100.0,
    ) {
        let (v, m): (Vec<f64>, Vec<f64>) = pairs.iter().copied().unzip();
        let p = normalized_field_product(&v, &m).unwrap();
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(0.0, f64::max);
        prop_assert!(p >= lo * (1.0 - 1e-12) && p <= hi * (1.0 + 1e-12));

        let scaled: Vec<f64> = m.iter().map(|x| x * scale).collect();
        let q = normalized_field_product(&v, &scaled).unwrap();
        prop_assert!((p - q).abs() <= 1e-12 * p);

        let (mut rv, mut rm) = (v.clone(), m.clone());
        rv.reverse();
        rm.reverse();
        let r = normalized_field_product(&rv, &rm).unwrap();
        prop_assert!((p - r).abs() <= 1e-12 * p);
    }

    #[test]
    fn damping_stays_between_old_and_candidate(
        triples in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..30),
        step in 1e-4f64..=1.0,
    ) {
        let (old, cand): (Vec<f64>, Vec<f64>) = triples.iter().copied().unzip();
        let n = old.len();
        let out = apply_step_damping(&old, &cand, step, &vec![-1.0; n], &vec![1.0; n]).unwrap();
        for j in 0..n {
            let (a, b) = (old[j].min(cand[j]), old[j].max(cand[j]));
            prop_assert!(out[j] >= a - 1e-15 && out[j] <= b + 1e-15);
            prop_assert!(((out[j] - old[j]) - step * (cand[j] - old[j])).abs() <= 1e-15);
        }
    }

    #[test]
    fn densities_are_fractions_and_mirror_with_the_design(
        shaping in shapings(),
        nx in 2usize..9,
        ny in 2usize..7,
        ls in 1usize..3,
        seed in prop::collection::vec(0.0f64..1.0, 64),
    ) {
        let mesh = build_grid(Dim::Two, &[nx, ny], &[1.0, 1.0]).unwrap();
        let table = build_neighborhoods(&mesh, NeighborhoodShape::Square(ls)).unwrap();
        let (lo, hi) = match shaping {
            ShapingFunction::Exp => (-2.5, -0.05),
            ShapingFunction::Tanh => (0.05, 2.0),
            ShapingFunction::Power { .. } => (1.01, 3.0),
            ShapingFunction::Atan => (0.05, 3.0),
        };
        // mirror-symmetric design about the vertical mid-line
        let mut beta = vec![0.0; nx * ny];
        for j in 0..ny {
            for i in 0..nx {
                let t = seed[(i.min(nx - 1 - i) + 4 * j) % 64];
                beta[mesh.element_index(i, j, 0)] = lo + t * (hi - lo);
            }
        }
        let d = DesignField::with_default_bounds(beta, shaping, &table).unwrap();
        let rho = evaluate_density(&d, &table).unwrap();
        let r = rho.values();
        prop_assert!(r.iter().all(|&x| (0.0..=1.0).contains(&x)));
        let g = grayness(&rho).unwrap();
        prop_assert!((0.0..=1.0).contains(&g));
        for j in 0..ny {
            for i in 0..nx {
                let (a, b) = (r[mesh.element_index(i, j, 0)], r[mesh.element_index(nx - 1 - i, j, 0)]);
                prop_assert!((a - b).abs() <= 1e-14);
            }
        }
    }

    #[test]
    fn grid_counts(nx in 1usize..12, ny in 1usize..12, nz in 1usize..6) {
        let m2 = build_grid(Dim::Two, &[nx, ny], &[1.0, 1.0]).unwrap();
        prop_assert_eq!(m2.element_count(), nx * ny);
        prop_assert_eq!(m2.node_count(), (nx + 1) * (ny + 1));
        let m3 = build_grid(Dim::Three, &[nx, ny, nz], &[1.0, 0.5, 2.0]).unwrap();
        prop_assert_eq!(m3.element_count(), nx * ny * nz);
        prop_assert_eq!(m3.node_count(), (nx + 1) * (ny + 1) * (nz + 1));
    }
}
