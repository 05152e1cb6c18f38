use diagest::adaptive::Stage;
use diagest_demo::{adaptive_view, bounds_rows, compare, MAX_N};

#[test]
fn adaptive_view_reports_a_consistent_run() {
    let v = adaptive_view("exp", 120, 0.25, 0.01, 3).unwrap();
    assert_eq!(v.truth.len(), 120);
    assert_eq!(v.estimate.len(), 120);
    assert!(v.relative_error < 0.25);
    assert!(v.trace.iter().any(|t| t.stage == Stage::Grow && t.index == v.k_chosen));
    let json = serde_json::to_value(&v).unwrap();
    assert_eq!(json["trace"][0]["stage"], "grow");
}

#[test]
fn comparison_shares_the_adaptive_budget() {
    let scores = compare("poly", 80, 0.25, 0.01, 1, 2).unwrap();
    let names: Vec<_> = scores.iter().map(|s| s.method).collect();
    assert_eq!(names, ["adaptive", "bekas", "diagpp", "xdiag-r", "xdiag-g"]);
    assert_eq!(scores[1].mean_matvecs, scores[0].mean_matvecs);
    assert!(scores[3].mean_matvecs <= scores[0].mean_matvecs);
}

#[test]
fn bounds_reference_row() {
    let rows = bounds_rows(0.25, 0.01, 5000, &[0.0, 1.0]).unwrap();
    assert_eq!((rows[0].g, rows[1].g), (1, 473));
    assert_eq!(rows[1].baston, 210);
}

#[test]
fn bad_inputs_are_errors() {
    assert!(adaptive_view("exp", MAX_N + 1, 0.25, 0.01, 0).is_err());
    assert!(adaptive_view("bogus", 10, 0.25, 0.01, 0).is_err());
    assert!(compare("exp", 10, 0.25, 0.01, 0, 0).is_err());
    assert!(bounds_rows(0.25, 1.5, 10, &[1.0]).is_err());
}
