//! Properties of annuli, their rasterizations and pairwise intersections.

mod common;

use std::collections::HashSet;

use proptest::prelude::*;

use annulus_lab::geometry::{annulus_intersection_area, rasterize_annulus, span_overlap_count, tangency_params, Annulus, Circle, RowSpan};
use annulus_lab::grid::GridSpec;
use common::point_in_disc;

fn cells(spans: &[RowSpan]) -> HashSet<(usize, usize)> {
    spans.iter().flat_map(|s| (s.i0..=s.i1).map(move |i| (s.j, i))).collect()
}

fn circle() -> impl Strategy<Value = Circle> {
    (point_in_disc(0.25), 1.0f64..2.0).prop_map(|(c, r)| Circle::new(c, r).unwrap())
}

/// A pair of circles in the working regime; half the pairs are pushed
/// close to internal tangency, where the intersection is largest.
fn circle_pair() -> impl Strategy<Value = (Circle, Circle)> {
    (circle(), point_in_disc(0.25), 1.0f64..2.0, any::<bool>(), -0.02f64..0.02).prop_map(|(c1, y, s, tangent, jitter)| {
        let s = if tangent {
            let d = (c1.center[0] - y[0]).hypot(c1.center[1] - y[1]);
            let t = if c1.radius + d <= 2.0 { c1.radius + d } else { c1.radius - d };
            (t + jitter).clamp(1.0, 2.0)
        } else {
            s
        };
        (c1, Circle::new(y, s).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tangency_params_are_symmetric((c1, c2) in circle_pair()) {
        prop_assert_eq!(tangency_params(&c1, &c2), tangency_params(&c2, &c1));
        let (big_delta, d) = tangency_params(&c1, &c2);
        prop_assert!(big_delta >= 0.0 && big_delta <= d + 1e-15);
    }

    /// Rasterized shells that share a cell obey |r − s| ≤ |x − y| + 2δ.
    #[test]
    fn intersecting_rasters_have_close_radii((c1, c2) in circle_pair(), k in 5u32..8) {
        let delta = 2f64.powi(-(k as i32));
        let spec = GridSpec::standard(k + 2).unwrap();
        let a = rasterize_annulus(&Annulus::new(c1, delta).unwrap(), &spec).unwrap();
        let b = rasterize_annulus(&Annulus::new(c2, delta).unwrap(), &spec).unwrap();
        if span_overlap_count(&a, &b) > 0 {
            let dist = (c1.center[0] - c2.center[0]).hypot(c1.center[1] - c2.center[1]);
            prop_assert!((c1.radius - c2.radius).abs() <= dist + 2.0 * delta + 1e-12);
        }
    }

    /// S_δ(x, r) ⊆ S_{10δ}(x̄, r̄) whenever |(x, r) − (x̄, r̄)| ≤ δ, as sets
    /// of rasterized cells.
    #[test]
    fn locally_constant_inclusion(c in circle(), dir in proptest::collection::vec(-1.0f64..1.0, 3), scale in 0.0f64..1.0, k in 5u32..8) {
        let delta = 2f64.powi(-(k as i32));
        let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assume!(norm > 1e-6);
        let step: Vec<f64> = dir.iter().map(|v| v / norm * scale * delta).collect();
        let bar = Circle::new([c.center[0] + step[0], c.center[1] + step[1]], c.radius + step[2]).unwrap();
        let spec = GridSpec::standard(k + 1).unwrap();
        let inner = cells(&rasterize_annulus(&Annulus::new(c, delta).unwrap(), &spec).unwrap());
        let outer = cells(&rasterize_annulus(&Annulus::new(bar, 10.0 * delta).unwrap(), &spec).unwrap());
        prop_assert!(!inner.is_empty());
        prop_assert!(inner.is_subset(&outer));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    /// |S_δ(x,r) ∩ S_δ(y,s)| ≤ 40·δ² / √((Δ+δ)(d+δ)).
    #[test]
    fn intersection_area_bound((c1, c2) in circle_pair(), k in 5u32..8) {
        let delta = 2f64.powi(-(k as i32));
        let area = annulus_intersection_area(&Annulus::new(c1, delta).unwrap(), &Annulus::new(c2, delta).unwrap(), 32).unwrap();
        let (big_delta, d) = tangency_params(&c1, &c2);
        let bound = 40.0 * delta * delta / ((big_delta + delta) * (d + delta)).sqrt();
        prop_assert!(area <= bound, "area {area} exceeds {bound} (Δ={big_delta}, d={d})");
    }

    #[test]
    fn intersection_area_is_symmetric_and_below_each_shell((c1, c2) in circle_pair()) {
        let delta = 2f64.powi(-6);
        let (a1, a2) = (Annulus::new(c1, delta).unwrap(), Annulus::new(c2, delta).unwrap());
        let ab = annulus_intersection_area(&a1, &a2, 32).unwrap();
        let ba = annulus_intersection_area(&a2, &a1, 32).unwrap();
        prop_assert_eq!(ab, ba);
        prop_assert!(ab <= a1.area().min(a2.area()) * 1.02);
    }
}

#[test]
fn concentric_annuli_with_distant_radii_do_not_meet() {
    let delta = 2f64.powi(-6);
    let a = Annulus::new(Circle::new([0.0, 0.0], 1.0).unwrap(), delta).unwrap();
    let b = Annulus::new(Circle::new([0.0, 0.0], 1.0 + 3.0 * delta).unwrap(), delta).unwrap();
    assert_eq!(annulus_intersection_area(&a, &b, 32).unwrap(), 0.0);
}
