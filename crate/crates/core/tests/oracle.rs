use std::time::Instant;

use cfuc_core::objects::{counter_spec, grow_set_spec, register_spec, spec_by_name};
use cfuc_core::verify::{oracle_suite, OracleBounds, Reference};

#[test]
fn counter_algebra_matches_oracle_at_length_four() {
    let start = Instant::now();
    let report = oracle_suite(&Reference, &counter_spec(), OracleBounds::for_max_len(4));
    assert!(report.passed(), "{:?}", report.mismatch);
    eprintln!("{:?} in {:?}", report.counts, start.elapsed());
}

#[test]
fn other_objects_match_oracle_at_length_three() {
    for spec in [
        grow_set_spec(),
        register_spec(),
        spec_by_name("total-conflict-queue").unwrap(),
        spec_by_name("counter-updates-only").unwrap(),
    ] {
        let report = oracle_suite(&Reference, &spec, OracleBounds::for_max_len(3));
        assert!(report.passed(), "{}: {:?}", spec.name(), report.mismatch);
    }
}
