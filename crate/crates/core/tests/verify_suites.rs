//! The library's own verification groups must pass; they are the runtime
//! face of the same oracles the test suite pins.

use mzmetry::verify::{run_all, run_group, VerifyGroup, ALL_GROUPS};

#[test]
fn all_groups_pass() {
    for report in run_all() {
        assert!(
            report.passed,
            "group {} failed: max deviation {:.3e} vs tolerance {:.1e} over {} cases",
            report.group.name(),
            report.max_deviation,
            report.tolerance,
            report.cases
        );
    }
}

#[test]
fn group_names_round_trip() {
    for group in ALL_GROUPS {
        let parsed: VerifyGroup = group.name().parse().unwrap();
        assert_eq!(parsed, group);
    }
    assert!("no-such-group".parse::<VerifyGroup>().is_err());
}

#[test]
fn reports_carry_case_counts_and_deviations() {
    let report = run_group(VerifyGroup::ClosedVsDet);
    assert_eq!(report.cases, 21 * 21 * 3 * 3 * 2);
    assert!(report.max_deviation >= 0.0);
    assert_eq!(report.tolerance, 1e-12);
}
