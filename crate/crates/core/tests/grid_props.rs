//! Properties of discrete measures and the Frostman / Katz–Tao constants.

mod common;

use proptest::prelude::*;

use annulus_lab::cantor::CantorBuilder;
use annulus_lab::grid::{frostman_constant, katz_tao_constant, measure_from_katz_tao};
use common::{lattice_set, unit_measure};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// On radii ρ ≤ 1, ρ^α' ≥ ρ^α for α' < α, so the constant can only
    /// shrink when the exponent is lowered.
    #[test]
    fn frostman_constant_is_monotone_in_alpha(mu in unit_measure(3..6, 40), a in 0.2f64..2.0, t in 0.0f64..1.0) {
        let lower = a * t;
        prop_assume!(lower > 0.05);
        let hi = frostman_constant(&mu, a).unwrap();
        let lo = frostman_constant(&mu, lower).unwrap();
        prop_assert!(lo <= hi * (1.0 + 1e-12), "⟨μ⟩ at α'={lower}: {lo} > ⟨μ⟩ at α={a}: {hi}");
    }

    #[test]
    fn katz_tao_constant_is_inherited_by_subsets((delta, pts) in lattice_set(3..7, 60), alpha in 0.3f64..2.0, mask in proptest::collection::vec(any::<bool>(), 60)) {
        let sub: Vec<[f64; 2]> = pts.iter().zip(&mask).filter(|(_, &m)| m).map(|(p, _)| *p).collect();
        prop_assume!(!sub.is_empty());
        let whole = katz_tao_constant(&pts, delta, alpha).unwrap();
        let part = katz_tao_constant(&sub, delta, alpha).unwrap();
        prop_assert!(part <= whole * (1.0 + 1e-12));
    }

    /// Putting mass δ^α on every point's cell turns the Katz–Tao constant
    /// into the Frostman constant up to the ball-discretization factor.
    #[test]
    fn katz_tao_and_frostman_constants_correspond((delta, pts) in lattice_set(3..7, 60), alpha in 0.3f64..2.0) {
        let kt = katz_tao_constant(&pts, delta, alpha).unwrap();
        let mu = measure_from_katz_tao(&pts, delta, delta.powf(alpha)).unwrap();
        let fr = frostman_constant(&mu, alpha).unwrap();
        let factor = 2f64.powf(alpha + 2.0);
        prop_assert!(fr <= factor * kt && kt <= factor * fr, "KT {kt} vs Frostman {fr}");
    }

    #[test]
    fn measure_weights_are_nonnegative_and_mass_adds(mu in unit_measure(2..6, 30)) {
        prop_assert!(mu.weights().iter().all(|&w| w >= 0.0));
        let sum: f64 = mu.weights().iter().sum();
        prop_assert!((sum - mu.total_mass()).abs() <= 1e-12 * sum.max(1.0));
    }
}

#[test]
fn cantor_sets_have_bounded_katz_tao_constant() {
    for alpha in [0.5, 1.0, 1.5, 1.75] {
        for k in 4..=8 {
            let x = CantorBuilder::unit(alpha, 5).build(2f64.powi(-k)).unwrap();
            assert!(x.kt_constant() <= 8.0, "α={alpha}, δ=2^-{k}: {}", x.kt_constant());
        }
    }
}
