//! The gradient checker on its own instances.

use deform3d::gradcheck::{check_all, check_objective, random_instance, STEP_FRACTION};

#[test]
fn all_terms_pass_on_several_seeds() {
    for seed in 0..3 {
        for r in check_all(seed, 1e-3).unwrap() {
            assert!(r.passed, "seed {seed}: {r}");
        }
    }
}

#[test]
fn corrupted_image_backward_is_caught_and_named() {
    let (mut objective, d) = random_instance(1).unwrap();
    objective.corrupt_biou_backward = true;
    let h = STEP_FRACTION * objective.source.bbox_diagonal();
    let reports = check_objective(&objective, &d, h, 1e-3).unwrap();
    let failed: Vec<&str> = reports.iter().filter(|r| !r.passed).map(|r| r.term.as_str()).collect();
    assert_eq!(failed, vec!["biou", "total"]);
}

#[test]
fn zero_tolerance_fails() {
    let reports = check_all(0, 0.0).unwrap();
    assert!(reports.iter().any(|r| !r.passed));
}
