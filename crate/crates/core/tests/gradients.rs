mod common;

use common::*;
use s2c_core::splat::PARAMS_PER_GAUSSIAN;

#[test]
fn analytic_gradients_match_central_differences() {
    for seed in 0..3 {
        let mut r = rng(100 + seed);
        let set = random_gaussians(&mut r, 5);
        let cam = axis_camera(32, 32, 40.0);
        let target = random_image(&mut r, 32, 32);
        let res = check_gradients(&set, &cam, &target, 1e-4, 1e-3);
        let total = set.len() * PARAMS_PER_GAUSSIAN;
        assert_eq!(res.checked + res.excluded, total);
        assert!(
            res.checked * 2 > total,
            "too many exclusions: {}",
            res.excluded
        );
        let frac = res.passed as f64 / res.checked as f64;
        assert!(
            frac >= 0.99,
            "seed {seed}: pass fraction {frac}, failures {:?}",
            res.failures
        );
    }
}
