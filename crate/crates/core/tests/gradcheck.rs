//! Analytic gradients of the tiny network against central differences.

use dialect_id::cnn::{count_params, smooth_gradient_checks, CnnConfig, Mode};

fn check(mode: Mode, wanted: usize) {
    let total = count_params(&CnnConfig::tiny()).unwrap().total;
    let checks = smooth_gradient_checks(CnnConfig::tiny(), mode, wanted, 40, 1e-3).unwrap();
    assert_eq!(checks.len(), wanted, "too few draws stayed on one linear piece");
    for c in checks {
        assert_eq!(c.checked, total);
        assert!(c.worst < 1e-3, "seed {}: worst relative error {:e}", c.model_seed, c.worst);
    }
}

#[test]
fn every_parameter_matches_finite_differences() {
    check(Mode::Eval, 3);
}

#[test]
fn dropout_masks_are_reused_in_backward() {
    check(Mode::Train, 2);
}
