//! Properties of the extremal examples and the admissible-region classifier.

use proptest::prelude::*;

use annulus_lab::extremal::{admissible_region, build_example, necessary_conditions, necessary_margins, predicted_exponents, Region};
use annulus_lab::grid::frostman_constant;
use annulus_lab::mixed_norm::{Exponent, NormParams};

/// Example `id` tests necessary condition `CONDITION[id − 1]`; its exponent
/// gap LHS − RHS is `GAP_SCALE[id − 1]` times that condition's margin.
const CONDITION: [usize; 5] = [0, 1, 2, 3, 4];
const GAP_SCALE: [f64; 5] = [1.0, 0.5, 1.0, 0.5, 1.0];

fn params() -> impl Strategy<Value = NormParams> {
    (0.0f64..=1.0, 0.0f64..=1.0, 0.0f64..=1.0, 0.01f64..=2.0).prop_map(|(ip, iq, is, a)| {
        NormParams::new(
            Exponent::from_inverse(ip.max(1e-3)).unwrap(),
            Exponent::from_inverse(iq).unwrap(),
            Exponent::from_inverse(is).unwrap(),
            a,
        )
        .unwrap()
    })
}

fn tabulated() -> impl Strategy<Value = (Exponent, f64)> {
    prop_oneof![(0.01f64..=1.0).prop_map(|a| (Exponent::Finite(3.0), a)), (1.01f64..=2.0).prop_map(|a| (Exponent::Finite(2.0), a)),]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn prediction_gap_is_the_condition_margin(p in params(), id in 1u8..=5) {
        let Ok((lhs, rhs)) = predicted_exponents(id, &p) else {
            // Outside the example's α range there is nothing to compare.
            prop_assert!(!(id == 4 && p.alpha >= 1.0) && !(id == 5 && p.alpha <= 1.0));
            return Ok(());
        };
        let margin = necessary_margins(&p)[CONDITION[id as usize - 1]].expect("condition applies in the example's α range");
        let gap = lhs - rhs;
        prop_assert!((gap - GAP_SCALE[id as usize - 1] * margin).abs() <= 1e-12);
        if margin.abs() > 1e-12 {
            prop_assert_eq!(gap >= -1e-12, necessary_conditions(&p)[CONDITION[id as usize - 1]]);
        }
    }

    /// Every point classified as proved satisfies all necessary conditions.
    #[test]
    fn proved_region_sits_inside_necessary_region((p, alpha) in tabulated(), x in 0.0f64..=1.0, y in 0.0f64..=1.0) {
        let region = admissible_region(p, alpha, x, y).unwrap();
        let np = NormParams::new(p, Exponent::from_inverse(x).unwrap(), Exponent::from_inverse(y).unwrap(), alpha).unwrap();
        let conds = necessary_conditions(&np);
        match region {
            Region::Proved | Region::ConjecturedOnly => prop_assert!(conds.iter().all(|&c| c), "{region} at ({x},{y}) violates {conds:?}"),
            Region::Excluded => prop_assert!(!conds.iter().all(|&c| c)),
        }
    }

    #[test]
    fn outside_the_unit_square_is_excluded((p, alpha) in tabulated(), x in 1.0001f64..3.0, y in -1.0f64..2.0) {
        prop_assert_eq!(admissible_region(p, alpha, x, y).unwrap(), Region::Excluded);
        prop_assert_eq!(admissible_region(p, alpha, y.clamp(0.0, 1.0), -x).unwrap(), Region::Excluded);
    }
}

#[test]
fn example_measures_satisfy_ball_condition() {
    for (id, alpha) in [(1, 0.5), (2, 1.5), (2, 0.5), (3, 1.5), (4, 1.5), (5, 0.5)] {
        for k in 5..=9 {
            let ex = build_example(id, 2f64.powi(-k), alpha).unwrap();
            let c = frostman_constant(&ex.nu, alpha).unwrap();
            assert!(c <= 8.0, "example {id}, α={alpha}, δ=2^-{k}: ⟨ν⟩ = {c}");
        }
    }
}
