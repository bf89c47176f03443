//! Shared generators for the integration and property tests.

#![allow(dead_code)]

use proptest::prelude::*;

use annulus_lab::grid::{DiscreteMeasure, GridSpec};

/// Centre of lattice cell `(i, j)` at spacing `delta` anchored at the origin.
pub fn cell_centre(i: i64, j: i64, delta: f64) -> [f64; 2] {
    [(i as f64 + 0.5) * delta, (j as f64 + 0.5) * delta]
}

/// A nonempty δ-separated point set: distinct cell centres in an n×n block
/// of the δ-lattice, with δ = 2^-k.
pub fn lattice_set(k: std::ops::Range<u32>, max_points: usize) -> impl Strategy<Value = (f64, Vec<[f64; 2]>)> {
    k.prop_flat_map(move |k| {
        let n = 1i64 << k.min(6);
        let delta = 2f64.powi(-(k as i32));
        proptest::collection::btree_set((0..n, 0..n), 1..=max_points)
            .prop_map(move |cells| (delta, cells.into_iter().map(|(i, j)| cell_centre(i, j, delta)).collect()))
    })
}

/// A random measure on the unit square at δ = 2^-k with weights in (0, 1].
pub fn unit_measure(k: std::ops::Range<u32>, max_cells: usize) -> impl Strategy<Value = DiscreteMeasure> {
    k.prop_flat_map(move |k| {
        let n = 1usize << k;
        proptest::collection::btree_map((0..n, 0..n), 0.001f64..1.0, 1..=max_cells).prop_map(move |cells| {
            let spec = GridSpec::new(k, [0.0, 0.0], n, n).unwrap();
            DiscreteMeasure::new(spec, cells.into_iter().collect()).unwrap()
        })
    })
}

/// A point of B(0, `radius`).
pub fn point_in_disc(radius: f64) -> impl Strategy<Value = [f64; 2]> {
    (0.0..radius, 0.0..std::f64::consts::TAU).prop_map(|(rho, th)| [rho * th.cos(), rho * th.sin()])
}
