//! Exhaustive comparison of the trace algebra against the brute-force oracle.
//!
//! Inputs are every schedule over the object's operations up to a length
//! bound, and every pair and triple of distinct traces up to a bound on their
//! total length. Distinct traces are enumerated by the oracle alone, as least
//! representatives of swap classes.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::objects::SequentialSpec;
use crate::trace::oracle::{all_schedules, Oracle};
use crate::trace::{self, ConflictRelation, OccurrenceRef, Op, Trace, TraceError};

/// The operations under test. Every method defaults to the library's
/// implementation; tests override one to check that the suite notices.
pub trait TraceAlgebra {
    fn normalize(&self, s: &[Op], conflicts: &ConflictRelation) -> Trace<Op> {
        trace::normalize(s, conflicts)
    }

    fn equivalent(&self, s: &[Op], t: &[Op], conflicts: &ConflictRelation) -> bool {
        trace::equivalent(s, t, conflicts)
    }

    fn is_prefix(&self, t: &Trace<Op>, u: &Trace<Op>) -> bool {
        trace::is_prefix(t, u)
    }

    fn glb(&self, set: &[Trace<Op>]) -> Result<Trace<Op>, TraceError> {
        trace::glb(set)
    }

    fn lub(&self, set: &[Trace<Op>]) -> Result<Trace<Op>, TraceError> {
        trace::lub(set)
    }

    fn compatible(&self, set: &[Trace<Op>]) -> bool {
        trace::compatible(set)
    }
}

pub struct Reference;

impl TraceAlgebra for Reference {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct OracleBounds {
    /// Longest schedule checked on its own.
    pub max_len: usize,
    /// Longest total length of a pair or triple.
    pub max_total: usize,
}

impl OracleBounds {
    pub fn for_max_len(max_len: usize) -> Self {
        OracleBounds {
            max_len,
            max_total: (2 * max_len).min(8),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Mismatch {
    pub check: &'static str,
    pub instance: String,
    pub expected: String,
    pub got: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct OracleReport {
    pub counts: BTreeMap<&'static str, u64>,
    pub mismatch: Option<Mismatch>,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.mismatch.is_none()
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }
}

fn show(s: &[Op]) -> String {
    if s.is_empty() {
        return "ε".into();
    }
    s.iter().map(|o| o.name()).collect::<Vec<_>>().join("·")
}

fn show_set(set: &[Vec<Op>]) -> String {
    format!(
        "{{{}}}",
        set.iter()
            .map(|s| format!("[{}]", show(s)))
            .collect::<Vec<_>>()
            .join(", ")
    )
}

struct Run<'a> {
    alg: &'a dyn TraceAlgebra,
    spec: &'a SequentialSpec,
    oracle: Oracle<Op>,
    report: OracleReport,
}

impl Run<'_> {
    fn tick(&mut self, check: &'static str) {
        *self.report.counts.entry(check).or_insert(0) += 1;
    }

    fn fail(&mut self, check: &'static str, instance: String, expected: String, got: String) {
        self.report.mismatch = Some(Mismatch {
            check,
            instance,
            expected,
            got,
        });
    }

    fn trace(&self, s: &[Op]) -> Trace<Op> {
        self.alg.normalize(s, self.spec.conflicts())
    }

    /// Returns false on the first mismatch.
    fn schedule(&mut self, s: &[Op]) -> bool {
        self.tick("normalize");
        let least = self.oracle.least(s);
        let got = self.trace(s);
        if got.letters() != least.as_slice() {
            self.fail(
                "normalize",
                format!("[{}]", show(s)),
                show(&least),
                show(got.letters()),
            );
            return false;
        }
        // Every representative gives every occurrence the same response.
        let class = self.oracle.class(s);
        for rep in class.iter() {
            let mut seen: BTreeMap<Op, usize> = BTreeMap::new();
            for &x in rep {
                let k = seen.entry(x).or_insert(0);
                *k += 1;
                let occ = OccurrenceRef::new(x, *k);
                self.tick("ret-star");
                let in_rep = trace::ret_star_schedule(&occ, rep, self.spec);
                let in_trace = trace::ret_star(&occ, &got, self.spec);
                if in_rep != in_trace {
                    self.fail(
                        "ret-star",
                        format!("{x}^({}) in [{}]", occ.index, show(rep)),
                        format!("{in_rep:?}"),
                        format!("{in_trace:?}"),
                    );
                    return false;
                }
            }
        }
        true
    }

    fn equivalence(&mut self, s: &[Op], t: &[Op]) -> bool {
        self.tick("equivalent");
        let expected = self.oracle.equivalent(s, t);
        let got = self.alg.equivalent(s, t, self.spec.conflicts());
        if expected != got {
            self.fail(
                "equivalent",
                format!("[{}] ~ [{}]", show(s), show(t)),
                expected.to_string(),
                got.to_string(),
            );
            return false;
        }
        true
    }

    fn pair(&mut self, a: &[Op], b: &[Op]) -> bool {
        let (ta, tb) = (self.trace(a), self.trace(b));
        self.tick("prefix");
        let expected = self.oracle.is_prefix(a, b);
        let got = self.alg.is_prefix(&ta, &tb);
        if expected != got {
            self.fail(
                "prefix",
                format!("[{}] <= [{}]", show(a), show(b)),
                expected.to_string(),
                got.to_string(),
            );
            return false;
        }
        if expected {
            // Responses of the shorter trace survive in its extension.
            let mut seen: BTreeMap<Op, usize> = BTreeMap::new();
            for &x in a {
                let k = seen.entry(x).or_insert(0);
                *k += 1;
                let occ = OccurrenceRef::new(x, *k);
                self.tick("ret-star-extension");
                let short = trace::ret_star(&occ, &ta, self.spec);
                let long = trace::ret_star(&occ, &tb, self.spec);
                if short != long {
                    self.fail(
                        "ret-star-extension",
                        format!("{x}^({}) in [{}] <= [{}]", occ.index, show(a), show(b)),
                        format!("{short:?}"),
                        format!("{long:?}"),
                    );
                    return false;
                }
            }
        }
        self.set(&[a.to_vec(), b.to_vec()])
    }

    fn set(&mut self, members: &[Vec<Op>]) -> bool {
        let traces: Vec<Trace<Op>> = members.iter().map(|m| self.trace(m)).collect();
        self.tick("glb");
        let expected = self.oracle.glb(members);
        match self.alg.glb(&traces) {
            Ok(g) if self.oracle.equivalent(g.letters(), &expected) => {}
            other => {
                let got = other.map_or_else(|e| e.to_string(), |g| show(g.letters()));
                self.fail("glb", show_set(members), show(&expected), got);
                return false;
            }
        }
        self.tick("lub");
        let bounds = self.oracle.minimal_upper_bounds(members);
        let got = self.alg.lub(&traces);
        let ok = match (&got, bounds.first()) {
            (Err(TraceError::Incompatible), None) => true,
            (Ok(l), Some(_)) => bounds
                .iter()
                .all(|u| self.oracle.equivalent(l.letters(), u)),
            _ => false,
        };
        if !ok {
            let expected = bounds.first().map_or("incompatible".into(), |u| show(u));
            let got = got.map_or_else(|e| e.to_string(), |l| show(l.letters()));
            self.fail("lub", show_set(members), expected, got);
            return false;
        }
        self.tick("compatible");
        let expected = !bounds.is_empty();
        let got = self.alg.compatible(&traces);
        if expected != got {
            self.fail(
                "compatible",
                show_set(members),
                expected.to_string(),
                got.to_string(),
            );
            return false;
        }
        true
    }
}

/// Runs every check, stopping at the first mismatch.
pub fn oracle_suite(
    alg: &dyn TraceAlgebra,
    spec: &SequentialSpec,
    bounds: OracleBounds,
) -> OracleReport {
    let mut run = Run {
        alg,
        spec,
        oracle: Oracle::new(spec.conflicts()),
        report: OracleReport::default(),
    };
    let schedules = all_schedules(spec.operations(), bounds.max_len);
    for s in &schedules {
        if !run.schedule(s) {
            return run.report;
        }
    }
    for s in &schedules {
        for t in schedules.iter().filter(|t| t.len() == s.len()) {
            if !run.equivalence(s, t) {
                return run.report;
            }
        }
    }
    if bounds.max_len == 0 {
        return run.report;
    }
    let classes: Vec<Vec<Op>> = schedules
        .iter()
        .map(|s| run.oracle.least(s))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    for a in &classes {
        for b in classes
            .iter()
            .filter(|b| a.len() + b.len() <= bounds.max_total)
        {
            if !run.pair(a, b) {
                return run.report;
            }
        }
    }
    for (i, a) in classes.iter().enumerate() {
        for (j, b) in classes.iter().enumerate().skip(i + 1) {
            for c in classes.iter().skip(j + 1) {
                if a.len() + b.len() + c.len() > bounds.max_total {
                    continue;
                }
                if !run.set(&[a.clone(), b.clone(), c.clone()]) {
                    return run.report;
                }
            }
        }
    }
    run.report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objects::counter_spec;

    #[test]
    fn empty_bound_passes_vacuously() {
        let r = oracle_suite(&Reference, &counter_spec(), OracleBounds::for_max_len(0));
        assert!(r.passed());
        assert_eq!(r.counts.get("normalize"), Some(&1));
    }

    #[test]
    fn small_bound_passes() {
        let r = oracle_suite(&Reference, &counter_spec(), OracleBounds::for_max_len(2));
        assert!(r.passed(), "{:?}", r.mismatch);
        assert!(r.counts["lub"] > 0);
    }

    struct ShortGlb;

    impl TraceAlgebra for ShortGlb {
        fn glb(&self, set: &[Trace<Op>]) -> Result<Trace<Op>, TraceError> {
            let g = trace::glb(set)?;
            let keep = g.len().saturating_sub(1);
            Ok(trace::normalize(&g.letters()[..keep], g.conflicts()))
        }
    }

    #[test]
    fn mutated_glb_is_reported() {
        let r = oracle_suite(&ShortGlb, &counter_spec(), OracleBounds::for_max_len(2));
        let m = r.mismatch.expect("a broken glb must be caught");
        assert_eq!(m.check, "glb");
    }
}
