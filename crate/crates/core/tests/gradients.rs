mod common;

use common::{check_gradient, draw_case};
use proptest::prelude::*;

const TOLERANCE: f64 = 1e-4;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn backprop_matches_finite_differences(
        objective in 0usize..9,
        log_t in -1.0f64..1.0,
        seed in any::<u64>(),
    ) {
        let g = check_gradient(&draw_case(objective, 10f64.powf(log_t), seed));
        prop_assert!(g.max_relative_error < TOLERANCE, "{g:?}");
        prop_assert!(g.skipped * 3 <= g.checked, "mostly kinks: {g:?}");
    }
}

#[test]
fn every_objective_at_extreme_temperatures() {
    for objective in 0..9 {
        for t in [0.1, 10.0] {
            let g = check_gradient(&draw_case(objective, t, 7));
            assert!(g.max_relative_error < TOLERANCE, "objective {objective} T={t}: {g:?}");
        }
    }
}

#[test]
fn rounding_noise_floor_is_needed_but_small() {
    // A loss in the hundreds carries ~1e-13 of absolute rounding noise, far
    // below the floor, so the floor never hides a real discrepancy.
    let case = draw_case(5, 1.0, 4);
    let loss = common::total_loss(&case.model, &case);
    assert!(loss > 1.0);
    assert!(common::NOISE_FLOOR * loss > 1e3 * f64::EPSILON * loss / common::FD_STEP);
}
