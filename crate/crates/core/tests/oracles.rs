mod common;

#[test]
fn width_closed_form_matches_projected_ascent() {
    let err = common::width_oracle_max_rel_err(100);
    assert!(err <= 1e-5, "worst relative error {err:e}");
}

#[test]
fn gil_pelaez_matches_chi_square_cdf() {
    let err = common::gp_chi_square_max_err();
    assert!(err <= 1e-6, "worst error {err:e}");
}

#[test]
fn solver_matches_null_space_line_search() {
    let gap = common::solver_null_space_gap(30);
    assert!(gap <= 1e-7, "objective gap {gap:e}");
}

#[test]
fn regression_recovers_consistent_volumes() {
    let err = common::synthetic_recovery_err(4);
    assert!(err <= 1e-3, "sup error {err:e}");
}
