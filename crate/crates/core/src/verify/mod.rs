//! Post-hoc checkers over execution records, and the trace-algebra oracle
//! suite.

pub mod gca;
pub mod invariants;
pub mod linearizability;
pub mod oracle_suite;
pub mod progress;

use serde::Serialize;

use crate::objects::SequentialSpec;
use crate::sim::record::ExecutionRecord;

pub use gca::{check_gca_properties, GcaProperty};
pub use invariants::{
    check_helping, check_memory_replay, check_round_monotonicity, check_same_round_commits,
    check_snapshot_containment, cross_check_uc_responses,
};
pub use linearizability::{check_linearizable, LinearizabilityError};
pub use oracle_suite::{oracle_suite, OracleBounds, OracleReport, Reference, TraceAlgebra};
pub use progress::{check_progress, ProgressClass, ScenarioMismatch};

/// Outcome of one check. A failing verdict always carries a witness.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub property: String,
    pub holds: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Verdict {
    pub fn pass(property: impl Into<String>) -> Self {
        Verdict {
            property: property.into(),
            holds: true,
            witness: None,
            detail: None,
        }
    }

    pub fn fail(property: impl Into<String>, witness: impl Into<String>) -> Self {
        Verdict {
            property: property.into(),
            holds: false,
            witness: Some(witness.into()),
            detail: None,
        }
    }

    pub fn from_result(property: impl Into<String>, result: Result<(), String>) -> Self {
        match result {
            Ok(()) => Self::pass(property),
            Err(w) => Self::fail(property, w),
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }
}

/// Folds many verdicts of one property into one: it holds iff all hold, and
/// carries the first witness.
pub fn summarize<'a>(property: &str, verdicts: impl IntoIterator<Item = &'a Verdict>) -> Verdict {
    let mut checked = 0usize;
    for v in verdicts {
        checked += 1;
        if !v.holds {
            let witness = format!(
                "{}: {}",
                v.property,
                v.witness.as_deref().unwrap_or("no witness")
            );
            return Verdict::fail(property, witness);
        }
    }
    Verdict::pass(property).with_detail(format!("{checked} instances"))
}

/// Every safety check that applies to `record`, one verdict per property.
/// Linearizability is checked for histories of at most `lin_bound`
/// operations; a longer history yields a failing verdict naming the bound.
pub fn check_safety(
    record: &ExecutionRecord,
    spec: &SequentialSpec,
    lin_bound: usize,
) -> Vec<Verdict> {
    let mut out = Vec::new();
    let is_uc = record.algorithm != "gca";
    if is_uc {
        out.push(
            match linearizability::check_linearizable_bounded(&record.history, spec, lin_bound) {
                Ok(v) => v,
                Err(e) => Verdict::fail("linearizability", e.to_string()),
            },
        );
    }
    let gca = check_gca_properties(record);
    for prop in GcaProperty::ALL {
        out.push(summarize(
            prop.name(),
            gca.iter().filter(|(_, p, _)| *p == prop).map(|(_, _, v)| v),
        ));
    }
    out.push(check_round_monotonicity(record));
    out.push(check_same_round_commits(record));
    out.push(check_snapshot_containment(record));
    out.push(check_memory_replay(record));
    if is_uc {
        out.push(cross_check_uc_responses(record, spec));
        out.push(check_helping(record));
    }
    out
}
