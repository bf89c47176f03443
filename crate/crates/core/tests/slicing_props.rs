//! Properties of Katz–Tao sets, tube slicing and same-slice arc overlaps.

mod common;

use proptest::prelude::*;

use annulus_lab::cantor::{cantor_1d, CantorBuilder};
use annulus_lab::grid::katz_tao_constant;
use annulus_lab::slicing::{retention_floor, slice_by_tubes, slice_l2_overlap, KatzTaoSet, SLICE_PAIR_CONSTANT};
use common::lattice_set;

/// {(a, b) : a ∈ δℤ ∩ [0,1), b ∈ B} with B a one-dimensional Cantor set of
/// dimension β; a Katz–Tao set of dimension 1 + β.
fn product_set(delta: f64, beta: f64, seed: u64) -> (KatzTaoSet, Vec<[f64; 2]>) {
    let b = cantor_1d(delta, beta, seed, 0.0, 1.0).unwrap();
    let n = (1.0 / delta).round() as usize;
    let pts: Vec<[f64; 2]> = (0..n).flat_map(|i| b.iter().map(move |&y| [(i as f64 + 0.5) * delta, y])).collect();
    let fibre: Vec<[f64; 2]> = b.iter().map(|&y| [0.5 * delta, y]).collect();
    (KatzTaoSet::new(pts, delta, 1.0 + beta).unwrap(), fibre)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn subsets_revalidate_with_smaller_constant((delta, pts) in lattice_set(3..7, 50), alpha in 0.3f64..2.0, mask in proptest::collection::vec(any::<bool>(), 50)) {
        let x = KatzTaoSet::new(pts, delta, alpha).unwrap();
        let idx: Vec<usize> = (0..x.len()).filter(|&i| mask[i]).collect();
        prop_assume!(!idx.is_empty());
        let sub = x.subset(&idx).unwrap();
        prop_assert!(sub.kt_constant() <= x.kt_constant() * (1.0 + 1e-12));
        prop_assert_eq!(sub.len(), idx.len());
    }

    /// Arcs of circles centred on one horizontal line, taken from the upper
    /// half, meet with area ≲ δ²/(|x₁ − x₂| + δ).
    #[test]
    fn upper_arcs_on_a_line_avoid_tangency(
        xs in proptest::collection::btree_set(-16i32..16, 1..6),
        radii in proptest::collection::vec(proptest::collection::btree_set(0u32..64, 1..4), 6),
        arc in 15usize..35,
        k in 5u32..7,
    ) {
        let delta = 2f64.powi(-(k as i32));
        let points: Vec<[f64; 2]> = xs.iter().map(|&i| [i as f64 * delta, 0.0]).collect();
        let radii: Vec<Vec<f64>> = radii[..points.len()].iter().map(|r| r.iter().map(|&j| 1.0 + j as f64 * delta).collect()).collect();
        let o = slice_l2_overlap(&points, &radii, delta, arc).unwrap();
        prop_assert!(o.max_pair_ratio <= SLICE_PAIR_CONSTANT, "ratio {}", o.max_pair_ratio);
        prop_assert!(o.value >= o.diagonal);
    }
}

#[test]
fn product_set_tubes_match_factor_constant() {
    for (k, beta, seed) in [(6, 0.5, 1), (6, 0.75, 2), (8, 0.5, 3)] {
        let delta = 2f64.powi(-k);
        let (x, fibre) = product_set(delta, beta, seed);
        let kt_b = katz_tao_constant(&fibre, delta, beta).unwrap();
        let dec = slice_by_tubes(&x, (0.0, std::f64::consts::TAU / 100.0), 16).unwrap();
        assert!(!dec.tubes.is_empty());
        for t in &dec.tubes {
            assert!(t.kt_constant <= 4.0 * kt_b, "tube constant {} vs KT(B) = {kt_b}", t.kt_constant);
        }
        assert!(dec.retention() >= retention_floor(delta));
    }
}

#[test]
fn slicing_cantor_sets_keeps_points_and_bounds_tubes() {
    for alpha in [1.25, 1.5, 1.75] {
        let delta = 2f64.powi(-7);
        let x = CantorBuilder::unit(alpha, 9).build(delta).unwrap();
        let dec = slice_by_tubes(&x, (0.0, std::f64::consts::TAU / 100.0), 24).unwrap();
        assert!(dec.retention() >= retention_floor(delta));
        let polylog = (1.0 / delta).log2();
        assert!(dec.max_tube_constant() <= polylog * x.kt_constant(), "α={alpha}");
        // Every kept point is assigned to exactly the tube that lists it.
        for (t, tube) in dec.tubes.iter().enumerate() {
            for &n in &tube.points {
                assert_eq!(dec.assignment[n], Some(t));
            }
        }
        assert_eq!(dec.refined_points.len(), dec.assignment.iter().flatten().count());
    }
}
