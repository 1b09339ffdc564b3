use ratm_core::rules::{check_rule, check_rules, falsified_rule, find_rule, message_passing_rules, RuleBounds};

#[test]
fn a_transactional_write_enters_the_write_set() {
    let report = check_rule(&find_rule("mp-1").unwrap(), &RuleBounds::default()).unwrap();
    assert!(report.holds, "{:?}", report.counterexample);
    assert!(report.exercised > 0);
}

#[test]
fn a_read_only_commit_preserves_conditional_observations() {
    let report = check_rule(&find_rule("txend-1").unwrap(), &RuleBounds::default()).unwrap();
    assert!(report.holds && report.exercised > 0);
}

#[test]
fn dropping_the_release_guard_is_refuted() {
    let report = check_rule(&falsified_rule(), &RuleBounds::default()).unwrap();
    assert!(!report.holds);
    let cex = report.counterexample.expect("a counterexample");
    assert!(!cex.trace.is_empty());
}

#[test]
fn message_passing_rules_hold() {
    for report in check_rules(&message_passing_rules(), &RuleBounds::default()).unwrap() {
        assert!(report.holds && report.exercised > 0, "{}", report.rule);
    }
}
