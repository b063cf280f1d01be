//! Record-level invariants of the shared memory and of the constructions.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use super::Verdict;
use crate::gca::{Candidate, CmdTrace};
use crate::objects::{Command, ProcessId, SequentialSpec};
use crate::sim::memory::{Action, Outcome};
use crate::sim::record::ExecutionRecord;
use crate::trace::{self, OccurrenceRef};
use crate::uc::CommittedEntry;

/// Traces committed by GCA calls, as `(round, process, trace)`.
fn commits(record: &ExecutionRecord) -> Vec<(u64, ProcessId, &CmdTrace)> {
    record
        .gca_ledger
        .iter()
        .filter_map(|e| match &e.output {
            Some(o) if o.committed => Some((e.round, e.process, &o.trace)),
            _ => None,
        })
        .collect()
}

/// A trace committed at round `r` is a prefix of every output of every
/// round `r' >= r`.
pub fn check_round_monotonicity(record: &ExecutionRecord) -> Verdict {
    let result = (|| {
        for (r, p, s) in commits(record) {
            for e in record.gca_ledger.iter().filter(|e| e.round >= r) {
                let Some(out) = &e.output else { continue };
                if !s.is_prefix_of(&out.trace) {
                    return Err(format!(
                        "p{p} committed {s} at round {r}, but p{} got {} at round {}",
                        e.process, out.trace, e.round
                    ));
                }
            }
        }
        Ok(())
    })();
    Verdict::from_result("round-monotonicity", result)
}

/// Commits of one round are equal, and every `S` write holds such a commit.
pub fn check_same_round_commits(record: &ExecutionRecord) -> Verdict {
    let result = (|| {
        let mut by_round: BTreeMap<u64, (ProcessId, &CmdTrace)> = BTreeMap::new();
        for (r, p, s) in commits(record) {
            match by_round.get(&r) {
                Some((q, t)) if *t != s => {
                    return Err(format!("round {r}: p{q} committed {t}, p{p} committed {s}"))
                }
                Some(_) => {}
                None => {
                    by_round.insert(r, (p, s));
                }
            }
        }
        for w in &record.committed_log {
            match by_round.get(&w.round) {
                Some((_, t)) if **t == w.trace => {}
                _ => {
                    return Err(format!(
                        "p{} wrote ({}, {}) to S without a matching commit",
                        w.process, w.round, w.trace
                    ))
                }
            }
        }
        Ok(())
    })();
    Verdict::from_result("same-round-commits", result)
}

/// Writes reflected in a view: cell index and value.
fn below<T: PartialEq>(a: &[Option<T>], b: &[Option<T>]) -> bool {
    a.iter()
        .zip(b)
        .all(|(x, y)| x.is_none() || x.as_ref() == y.as_ref())
}

fn chain<T: PartialEq>(mut views: Vec<&Vec<Option<T>>>) -> Result<(), usize> {
    views.sort_by_key(|v| v.iter().filter(|c| c.is_some()).count());
    match views.windows(2).position(|w| !below(w[0], w[1])) {
        Some(k) => Err(k),
        None => Ok(()),
    }
}

/// Any two scans of one snapshot object are ordered by containment.
pub fn check_snapshot_containment(record: &ExecutionRecord) -> Verdict {
    let mut a: BTreeMap<u64, Vec<&Vec<Option<CmdTrace>>>> = BTreeMap::new();
    let mut b: BTreeMap<u64, Vec<&Vec<Option<Candidate>>>> = BTreeMap::new();
    for s in &record.steps {
        match (&s.action, &s.outcome) {
            (Action::ScanA { round }, Outcome::ViewA(v)) => a.entry(*round).or_default().push(v),
            (Action::ScanB { round }, Outcome::ViewB(v)) => b.entry(*round).or_default().push(v),
            _ => {}
        }
    }
    let result = (|| {
        for (round, views) in a {
            chain(views)
                .map_err(|_| format!("two scans of A in round {round} are incomparable"))?;
        }
        for (round, views) in b {
            chain(views)
                .map_err(|_| format!("two scans of B in round {round} are incomparable"))?;
        }
        Ok(())
    })();
    Verdict::from_result("snapshot-containment", result)
}

/// Replays the step sequence against a fresh model of the memory: every
/// read returns the latest prior write and every scan the current cells.
pub fn check_memory_replay(record: &ExecutionRecord) -> Verdict {
    let Some(first) = record
        .gca_ledger
        .first()
        .map(|e| e.input.conflicts().clone())
        .or_else(|| {
            record
                .committed_log
                .first()
                .map(|w| w.trace.conflicts().clone())
        })
    else {
        // Nothing was ever proposed, so S can only hold its initial value.
        let ok = record.steps.iter().all(|s| match (&s.action, &s.outcome) {
            (Action::ReadS { .. }, Outcome::Entry(e)) => e.round == 0 && e.trace.is_empty(),
            _ => true,
        });
        return Verdict::from_result(
            "register-replay",
            if ok {
                Ok(())
            } else {
                Err("S read a value nobody wrote".into())
            },
        );
    };
    let n = record.n;
    let mut s = vec![CommittedEntry::initial(&first); n];
    let mut m: Vec<Option<Command>> = vec![None; n];
    let mut a: BTreeMap<u64, Vec<Option<CmdTrace>>> = BTreeMap::new();
    let mut b: BTreeMap<u64, Vec<Option<Candidate>>> = BTreeMap::new();
    for step in &record.steps {
        let i = step.process - 1;
        let expected = match &step.action {
            Action::ReadS { cell } => Outcome::Entry(s[cell - 1].clone()),
            Action::WriteS { entry } => {
                s[i] = entry.clone();
                Outcome::Done
            }
            Action::ReadM { cell } => Outcome::Announcement(m[cell - 1]),
            Action::WriteM { command } => {
                m[i] = Some(*command);
                Outcome::Done
            }
            Action::UpdateA { round, input } => {
                a.entry(*round).or_insert_with(|| vec![None; n])[i] = Some(input.clone());
                Outcome::Done
            }
            Action::ScanA { round } => {
                Outcome::ViewA(a.entry(*round).or_insert_with(|| vec![None; n]).clone())
            }
            Action::UpdateB { round, candidate } => {
                b.entry(*round).or_insert_with(|| vec![None; n])[i] = Some(candidate.clone());
                Outcome::Done
            }
            Action::ScanB { round } => {
                Outcome::ViewB(b.entry(*round).or_insert_with(|| vec![None; n]).clone())
            }
        };
        if expected != step.outcome {
            return Verdict::fail(
                "register-replay",
                format!(
                    "step {} of p{} returned a stale or foreign value",
                    step.index, step.process
                ),
            );
        }
    }
    Verdict::pass("register-replay")
}

/// Every response equals `ret*` of its command in the latest committed
/// trace, and some representative of that trace respects real-time order.
pub fn cross_check_uc_responses(record: &ExecutionRecord, spec: &SequentialSpec) -> Verdict {
    Verdict::from_result("uc-responses", response_check(record, spec))
}

fn response_check(record: &ExecutionRecord, spec: &SequentialSpec) -> Result<(), String> {
    let completed: Vec<_> = record
        .operations
        .iter()
        .filter(|o| o.is_complete())
        .collect();
    let Some(&(_, _, latest)) = commits(record).iter().max_by_key(|(r, _, _)| *r) else {
        return if completed.is_empty() {
            Ok(())
        } else {
            Err("operations returned but nothing was committed".into())
        };
    };
    for o in &completed {
        let cmd = o.command();
        if !latest.contains(&cmd) {
            return Err(format!(
                "{cmd} returned but is missing from the latest commit {latest}"
            ));
        }
        let expected =
            trace::ret_star(&OccurrenceRef::first(cmd), latest, spec).map_err(|e| e.to_string())?;
        if o.response.as_ref() != Some(&expected) {
            return Err(format!(
                "{cmd} returned {} but the latest commit gives {expected}",
                o.response
                    .as_ref()
                    .map_or("nothing".into(), ToString::to_string)
            ));
        }
    }
    real_time_representative(record, latest).map(|_| ())
}

/// Orders the letters of `t` so that dependent letters keep their order and
/// an operation that responded before another was invoked comes first.
pub fn real_time_representative(
    record: &ExecutionRecord,
    t: &CmdTrace,
) -> Result<Vec<Command>, String> {
    let letters = t.letters();
    let k = letters.len();
    let span: Vec<Option<(u64, Option<u64>)>> = letters
        .iter()
        .map(|c| {
            record
                .operation(c.process, c.seq)
                .map(|o| (o.invoked_step, o.responded_step))
        })
        .collect();
    let mut preds = vec![0usize; k];
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); k];
    for i in 0..k {
        for j in 0..k {
            let dependent = i < j && t.conflicts().conflicts(letters[i].op, letters[j].op);
            let before =
                matches!((span[i], span[j]), (Some((_, Some(ri))), Some((ij, _))) if ri < ij);
            if i != j && (dependent || before) {
                succ[i].push(j);
                preds[j] += 1;
            }
        }
    }
    let mut ready: VecDeque<usize> = (0..k).filter(|&i| preds[i] == 0).collect();
    let mut order = Vec::with_capacity(k);
    while let Some(i) = ready.pop_front() {
        order.push(letters[i]);
        for &j in &succ[i] {
            preds[j] -= 1;
            if preds[j] == 0 {
                ready.push_back(j);
            }
        }
    }
    if order.len() != k {
        return Err(format!("no representative of {t} respects real-time order"));
    }
    if trace::normalize(&order, t.conflicts()) != *t {
        return Err(format!("real-time order of {t} is not a representative"));
    }
    Ok(order)
}

/// Helping: a process that commits an extension of its own proposal commits
/// every command it collected from `M` for that proposal.
pub fn check_helping(record: &ExecutionRecord) -> Verdict {
    let mut collected: BTreeMap<ProcessId, BTreeSet<Command>> = BTreeMap::new();
    let mut by_call: BTreeMap<(u64, ProcessId), BTreeSet<Command>> = BTreeMap::new();
    for s in &record.steps {
        match (&s.action, &s.outcome) {
            (Action::ReadM { .. }, Outcome::Announcement(Some(c))) => {
                collected.entry(s.process).or_default().insert(*c);
            }
            (Action::UpdateA { round, .. }, _) => {
                let seen = collected.remove(&s.process).unwrap_or_default();
                by_call.insert((*round, s.process), seen);
            }
            _ => {}
        }
    }
    let result = (|| {
        for e in &record.gca_ledger {
            let seen = by_call
                .get(&(e.round, e.process))
                .cloned()
                .unwrap_or_default();
            if let Some(c) = seen.iter().find(|c| !e.input.contains(c)) {
                return Err(format!(
                    "p{} proposed {} at round {} without the announced {c}",
                    e.process, e.input, e.round
                ));
            }
            let Some(out) = &e.output else { continue };
            if out.committed && e.input.is_prefix_of(&out.trace) {
                if let Some(c) = seen.iter().find(|c| !out.trace.contains(c)) {
                    return Err(format!(
                        "p{} committed {} at round {} without the announced {c}",
                        e.process, out.trace, e.round
                    ));
                }
            }
        }
        Ok(())
    })();
    Verdict::from_result("helping", result)
}
