//! Bounded proxies for the progress conditions.
//!
//! Liveness is about infinite executions; a record is finite. Each proxy
//! fixes the point from which the condition's hypothesis holds in the record,
//! then asks whether the promised completions happen within a step budget
//! after it. A miss at budget `B` is re-evaluated once at `4B` before it is
//! reported, and the verdict says which budget was used.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::Verdict;
use crate::objects::{ProcessId, SequentialSpec};
use crate::sim::plan::SoloUntil;
use crate::sim::record::{ExecutionRecord, OperationRecord, SoloClose, SoloSpan};
use crate::uc::UcKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProgressClass {
    EventuallyConflictFree,
    SoloSuffix,
    ConflictResolving,
    ConflictForgetting,
}

impl ProgressClass {
    pub fn name(self) -> &'static str {
        match self {
            ProgressClass::EventuallyConflictFree => "eventually-conflict-free",
            ProgressClass::SoloSuffix => "solo-suffix",
            ProgressClass::ConflictResolving => "conflict-resolving",
            ProgressClass::ConflictForgetting => "conflict-forgetting",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("record does not have the structure of a {class} scenario: {reason}")]
pub struct ScenarioMismatch {
    pub class: &'static str,
    pub reason: String,
}

pub const RETRY_FACTOR: u64 = 4;

/// Evaluates `class` on `record` with budget `budget`, retrying at four
/// times the budget on a miss.
pub fn check_progress(
    record: &ExecutionRecord,
    spec: &SequentialSpec,
    kind: UcKind,
    class: ProgressClass,
    budget: u64,
) -> Result<Verdict, ScenarioMismatch> {
    let property = format!("progress.{}", class.name());
    let first = evaluate(record, spec, kind, class, budget)?;
    let (outcome, used) = match first {
        Ok(detail) => (Ok(detail), budget),
        Err(_) => (
            evaluate(record, spec, kind, class, budget * RETRY_FACTOR)?,
            budget * RETRY_FACTOR,
        ),
    };
    Ok(match outcome {
        Ok(detail) => Verdict::pass(property).with_detail(format!("budget {used}; {detail}")),
        Err(witness) => {
            Verdict::fail(property, witness).with_detail(format!("budget {used} after retry"))
        }
    })
}

type Evaluation = Result<String, String>;

fn evaluate(
    record: &ExecutionRecord,
    spec: &SequentialSpec,
    kind: UcKind,
    class: ProgressClass,
    budget: u64,
) -> Result<Evaluation, ScenarioMismatch> {
    let mismatch = |reason: String| ScenarioMismatch {
        class: class.name(),
        reason,
    };
    match class {
        ProgressClass::EventuallyConflictFree => {
            let tau = match (record.plan.phase_boundary, record.phase_switch_step) {
                (None, _) => 0,
                (Some(_), Some(t)) => t,
                (Some(b), None) => {
                    return Err(mismatch(format!(
                        "the run ended before the boundary at step {b}"
                    )))
                }
            };
            let later = |o: &&OperationRecord| o.invoked_step >= tau;
            if let Some((a, b)) = conflicting_overlap(record, spec, later) {
                return Err(mismatch(format!(
                    "{} and {} were invoked after the boundary and overlap",
                    a.command(),
                    b.command()
                )));
            }
            let Some(start) = conflict_free_from(record, spec, tau, |_| true) else {
                return Ok(Err(
                    "conflicting operations are still concurrent at the end of the run".into(),
                ));
            };
            Ok(match kind {
                UcKind::ConflictFree => all_complete(record, start, budget),
                UcKind::Weak => someone_completes(record, start, budget),
            })
        }
        ProgressClass::SoloSuffix => {
            if record.solo_spans.is_empty() {
                return Err(mismatch("the plan has no solo window".into()));
            }
            for span in &record.solo_spans {
                let wanted = match record.plan.solo_windows[span.window].until {
                    SoloUntil::Ops(k) => k,
                    SoloUntil::End | SoloUntil::FreshCommit => 1,
                };
                let outcome = solo_completes(record, span, wanted, budget).map_err(&mismatch)?;
                if let Err(w) = outcome {
                    return Ok(Err(w));
                }
            }
            Ok(Ok(format!("{} solo windows", record.solo_spans.len())))
        }
        ProgressClass::ConflictResolving | ProgressClass::ConflictForgetting => {
            let resolving = class == ProgressClass::ConflictResolving;
            let span = record
                .solo_spans
                .iter()
                .find(|s| {
                    let until = record.plan.solo_windows[s.window].until;
                    if resolving {
                        matches!(until, SoloUntil::Ops(k) if k >= 2)
                    } else {
                        until != SoloUntil::End
                    }
                })
                .ok_or_else(|| {
                    mismatch(if resolving {
                        "no solo window asks for two completed operations".into()
                    } else {
                        "no solo window ends on a commit or on completed operations".into()
                    })
                })?;
            if span.reason != SoloClose::Condition {
                return Ok(Err(format!(
                    "p{}'s solo extension did not finish: window closed ({:?}) after {} solo steps",
                    span.process, span.reason, span.solo_steps
                )));
            }
            if span.solo_steps > budget {
                return Ok(Err(format!(
                    "p{}'s solo extension took {} steps",
                    span.process, span.solo_steps
                )));
            }
            let end = span.closed;
            // The workload after the extension must be conflict-free on its
            // own; conflicts with operations that predate the extension are
            // what the extension is meant to resolve or forget.
            let later = |o: &&OperationRecord| o.invoked_step >= end;
            if let Some((a, b)) = conflicting_overlap(record, spec, later) {
                return Err(mismatch(format!(
                    "{} and {} were invoked after the solo extension, conflict and overlap",
                    a.command(),
                    b.command()
                )));
            }
            if resolving {
                return Ok(all_complete(record, end, budget));
            }
            // Forgetting only promises progress once no two conflicting
            // operations both still take steps.
            let Some(start) = weakly_conflict_free_from(record, spec, end) else {
                return Ok(Err(
                    "conflicting operations still take steps at the end of the run".into(),
                ));
            };
            Ok(someone_completes(record, start, budget))
        }
    }
}

/// Step of the last move `o`'s process made on its behalf, or `u64::MAX`
/// if it could still move when the run stopped.
fn last_active(record: &ExecutionRecord, o: &OperationRecord) -> u64 {
    if let Some(r) = o.responded_step {
        return r;
    }
    if record.unfinished.contains(&o.process) {
        return u64::MAX;
    }
    record
        .steps
        .iter()
        .rev()
        .find(|s| s.process == o.process)
        .map_or(o.invoked_step, |s| s.index.max(o.invoked_step))
}

/// First step at or after `from` past which no two conflicting operations
/// of different processes are both still taking steps while concurrent.
fn weakly_conflict_free_from(
    record: &ExecutionRecord,
    spec: &SequentialSpec,
    from: u64,
) -> Option<u64> {
    let ops = &record.operations;
    let mut start = from;
    for (k, a) in ops.iter().enumerate() {
        for b in &ops[k + 1..] {
            if a.process == b.process || !spec.conflicts().conflicts(a.op, b.op) {
                continue;
            }
            let (la, lb) = (last_active(record, a), last_active(record, b));
            let both_until = la.min(lb);
            if a.invoked_step.max(b.invoked_step) > both_until || both_until < from {
                continue;
            }
            if both_until == u64::MAX {
                return None;
            }
            start = start.max(both_until + 1);
        }
    }
    Some(start)
}

fn end_of(o: &OperationRecord) -> u64 {
    o.responded_step.unwrap_or(u64::MAX)
}

/// Two conflicting operations from different processes, both selected by
/// `filter`, whose intervals overlap.
fn conflicting_overlap<'a>(
    record: &'a ExecutionRecord,
    spec: &SequentialSpec,
    filter: impl Fn(&&'a OperationRecord) -> bool,
) -> Option<(&'a OperationRecord, &'a OperationRecord)> {
    let ops: Vec<&OperationRecord> = record.operations.iter().filter(filter).collect();
    for (k, a) in ops.iter().enumerate() {
        for b in &ops[k + 1..] {
            if a.process != b.process
                && spec.conflicts().conflicts(a.op, b.op)
                && a.invoked_step <= end_of(b)
                && b.invoked_step <= end_of(a)
            {
                return Some((a, b));
            }
        }
    }
    None
}

/// First step at or after `tau` from which no two conflicting operations
/// are pending together, or `None` if such a pair is still pending at the end.
fn conflict_free_from(
    record: &ExecutionRecord,
    spec: &SequentialSpec,
    tau: u64,
    filter: impl Fn(&&OperationRecord) -> bool,
) -> Option<u64> {
    let ops: Vec<&OperationRecord> = record.operations.iter().filter(filter).collect();
    let mut start = tau;
    for (k, a) in ops.iter().enumerate() {
        for b in &ops[k + 1..] {
            if a.process == b.process || !spec.conflicts().conflicts(a.op, b.op) {
                continue;
            }
            if a.invoked_step > end_of(b) || b.invoked_step > end_of(a) {
                continue;
            }
            let overlap_end = end_of(a).min(end_of(b));
            if overlap_end == u64::MAX {
                return None;
            }
            start = start.max(overlap_end + 1);
        }
    }
    Some(start)
}

fn relevant(record: &ExecutionRecord, p: ProcessId, from: u64) -> Vec<&OperationRecord> {
    record
        .operations
        .iter()
        .filter(|o| o.process == p && end_of(o) >= from)
        .collect()
}

fn live(record: &ExecutionRecord) -> impl Iterator<Item = ProcessId> + '_ {
    (1..=record.n).filter(|p| !record.is_crashed(*p))
}

/// Every live process completes every operation it has pending at `from` or
/// invokes later, by `from + budget`.
fn all_complete(record: &ExecutionRecord, from: u64, budget: u64) -> Evaluation {
    let deadline = from.saturating_add(budget);
    let mut count = 0;
    for p in live(record) {
        for o in relevant(record, p, from) {
            count += 1;
            match o.responded_step {
                Some(at) if at <= deadline => {}
                Some(at) => {
                    return Err(format!(
                        "{} completed at step {at}, after {deadline}",
                        o.command()
                    ))
                }
                None => return Err(format!("{} never completed", o.command())),
            }
        }
    }
    if let Some(p) = record.unfinished.iter().find(|p| !record.is_crashed(**p)) {
        return Err(format!("the run stopped while p{p} still had work"));
    }
    Ok(format!("{count} operations completed after step {from}"))
}

/// Some live process with work after `from` completes all of it by
/// `from + budget`.
fn someone_completes(record: &ExecutionRecord, from: u64, budget: u64) -> Evaluation {
    let deadline = from.saturating_add(budget);
    let mut candidates = 0;
    for p in live(record) {
        let ops = relevant(record, p, from);
        if ops.is_empty() {
            continue;
        }
        candidates += 1;
        let done = ops
            .iter()
            .all(|o| o.responded_step.is_some_and(|at| at <= deadline));
        if done && !record.unfinished.contains(&p) {
            return Ok(format!(
                "p{p} completed all {} of its operations",
                ops.len()
            ));
        }
    }
    if candidates == 0 {
        Ok("no process had work after the boundary".into())
    } else {
        Err(format!(
            "none of {candidates} live processes completed all its operations by step {deadline}"
        ))
    }
}

fn solo_completes(
    record: &ExecutionRecord,
    span: &SoloSpan,
    wanted: usize,
    budget: u64,
) -> Result<Evaluation, String> {
    if span.reason == SoloClose::Stuck && span.solo_steps == 0 {
        return Err(format!(
            "p{} had nothing to do when its window opened",
            span.process
        ));
    }
    if span.ops_completed >= wanted && span.solo_steps <= budget {
        return Ok(Ok(format!(
            "p{} completed {} operations in {} solo steps",
            span.process, span.ops_completed, span.solo_steps
        )));
    }
    let pending = record
        .operations
        .iter()
        .filter(|o| o.process == span.process && o.pending_at(span.closed))
        .map(|o| o.command().to_string())
        .collect::<Vec<_>>();
    Ok(Err(format!(
        "p{} completed {} of {wanted} operations in {} solo steps (pending: {})",
        span.process,
        span.ops_completed,
        span.solo_steps,
        pending.join(", ")
    )))
}
