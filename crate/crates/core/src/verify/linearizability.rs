//! Exact linearizability checking for small histories.
//!
//! The main checker is a depth-first search in the style of Wing and Gong:
//! repeatedly pick an operation that no unpicked completed operation precedes
//! in real time, apply it to the sequential object, and backtrack on a wrong
//! response. Failed `(picked set, state)` pairs are memoized. Pending
//! operations may be picked (with any response) or left out.
//!
//! [`linearize_by_permutation`] is an independent second strategy used to
//! cross-check the first: it enumerates every subset of pending operations
//! and every ordering of the chosen operations.

use std::collections::{BTreeMap, HashSet};

use thiserror::Error;

use super::Verdict;
use crate::objects::{ProcessId, Response, SequentialSpec, State};
use crate::sim::record::{EventKind, HistoryEvent};
use crate::trace::Op;

pub const DEFAULT_BOUND: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinearizabilityError {
    #[error("history has {ops} operations, above the search bound of {bound}")]
    SearchBudgetExceeded { ops: usize, bound: usize },
    #[error("malformed history: {0}")]
    Malformed(String),
}

/// An operation assembled from its invocation and (optional) response.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinOp {
    pub process: ProcessId,
    pub seq: u64,
    pub op: Op,
    pub invoked: u64,
    pub response: Option<(Response, u64)>,
}

impl LinOp {
    /// `self` responded before `other` was invoked.
    pub fn precedes(&self, other: &LinOp) -> bool {
        self.response
            .as_ref()
            .is_some_and(|(_, at)| *at < other.invoked)
    }
}

impl std::fmt::Display for LinOp {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "p{}.{}:{}", self.process, self.seq, self.op)?;
        match &self.response {
            Some((r, _)) => write!(f, "->{r}"),
            None => f.write_str("->pending"),
        }
    }
}

/// Pairs invocations with responses, checking well-formedness.
pub fn operations_from_history(
    history: &[HistoryEvent],
) -> Result<Vec<LinOp>, LinearizabilityError> {
    let mut ops: Vec<LinOp> = Vec::new();
    let mut open: BTreeMap<ProcessId, usize> = BTreeMap::new();
    let mut last_step = 0;
    for e in history {
        if e.step_index < last_step {
            return Err(LinearizabilityError::Malformed(format!(
                "event at step {} after step {last_step}",
                e.step_index
            )));
        }
        last_step = e.step_index;
        match e.kind {
            EventKind::Invocation => {
                if open.contains_key(&e.process) {
                    return Err(LinearizabilityError::Malformed(format!(
                        "process {} invoked twice without a response",
                        e.process
                    )));
                }
                open.insert(e.process, ops.len());
                ops.push(LinOp {
                    process: e.process,
                    seq: e.seq,
                    op: e.op,
                    invoked: e.step_index,
                    response: None,
                });
            }
            EventKind::Response => {
                let k = open.remove(&e.process).ok_or_else(|| {
                    LinearizabilityError::Malformed(format!(
                        "response by process {} without an invocation",
                        e.process
                    ))
                })?;
                let value = e.value.clone().ok_or_else(|| {
                    LinearizabilityError::Malformed("response without a value".into())
                })?;
                if ops[k].op != e.op || ops[k].seq != e.seq {
                    return Err(LinearizabilityError::Malformed(format!(
                        "response of process {} does not match its invocation",
                        e.process
                    )));
                }
                ops[k].response = Some((value, e.step_index));
            }
        }
    }
    Ok(ops)
}

/// A legal sequential witness, as indices into `ops`, found by search.
pub fn linearize_by_search(ops: &[LinOp], spec: &SequentialSpec) -> Option<Vec<usize>> {
    assert!(
        ops.len() < 64,
        "bitmask search supports fewer than 64 operations"
    );
    struct Search<'a> {
        ops: &'a [LinOp],
        spec: &'a SequentialSpec,
        complete: u64,
        failed: HashSet<(u64, State)>,
        order: Vec<usize>,
    }
    impl Search<'_> {
        fn go(&mut self, done: u64, state: &State) -> bool {
            if done & self.complete == self.complete {
                return true;
            }
            if self.failed.contains(&(done, state.clone())) {
                return false;
            }
            for i in 0..self.ops.len() {
                if done & (1 << i) != 0 {
                    continue;
                }
                let blocked = (0..self.ops.len())
                    .any(|j| j != i && done & (1 << j) == 0 && self.ops[j].precedes(&self.ops[i]));
                if blocked {
                    continue;
                }
                let Ok((resp, next)) = self.spec.apply(self.ops[i].op, state) else {
                    continue;
                };
                if let Some((expected, _)) = &self.ops[i].response {
                    if *expected != resp {
                        continue;
                    }
                }
                self.order.push(i);
                if self.go(done | (1 << i), &next) {
                    return true;
                }
                self.order.pop();
            }
            self.failed.insert((done, state.clone()));
            false
        }
    }
    let complete = ops
        .iter()
        .enumerate()
        .filter(|(_, o)| o.response.is_some())
        .fold(0u64, |m, (i, _)| m | (1 << i));
    let mut s = Search {
        ops,
        spec,
        complete,
        failed: HashSet::new(),
        order: Vec::new(),
    };
    s.go(0, spec.initial()).then_some(s.order)
}

/// Same question as [`linearize_by_search`], answered by brute force.
pub fn linearize_by_permutation(ops: &[LinOp], spec: &SequentialSpec) -> Option<Vec<usize>> {
    let complete: Vec<usize> = (0..ops.len())
        .filter(|&i| ops[i].response.is_some())
        .collect();
    let pending: Vec<usize> = (0..ops.len())
        .filter(|&i| ops[i].response.is_none())
        .collect();
    for mask in 0..(1u32 << pending.len()) {
        let mut chosen = complete.clone();
        chosen.extend(
            pending
                .iter()
                .enumerate()
                .filter(|(k, _)| mask & (1 << k) != 0)
                .map(|(_, &i)| i),
        );
        let mut found = None;
        permute(&mut chosen, 0, &mut |perm| {
            if found.is_none() && legal(perm, ops, spec) {
                found = Some(perm.to_vec());
            }
        });
        if found.is_some() {
            return found;
        }
    }
    None
}

fn permute(items: &mut Vec<usize>, k: usize, visit: &mut dyn FnMut(&[usize])) {
    if k == items.len() {
        visit(items);
        return;
    }
    for j in k..items.len() {
        items.swap(k, j);
        permute(items, k + 1, visit);
        items.swap(k, j);
    }
}

fn legal(order: &[usize], ops: &[LinOp], spec: &SequentialSpec) -> bool {
    for (a, &i) in order.iter().enumerate() {
        if order[a + 1..].iter().any(|&j| ops[j].precedes(&ops[i])) {
            return false;
        }
    }
    let mut q = spec.initial().clone();
    for &i in order {
        let Ok((resp, next)) = spec.apply(ops[i].op, &q) else {
            return false;
        };
        if let Some((expected, _)) = &ops[i].response {
            if *expected != resp {
                return false;
            }
        }
        q = next;
    }
    true
}

pub fn check_linearizable(
    history: &[HistoryEvent],
    spec: &SequentialSpec,
) -> Result<Verdict, LinearizabilityError> {
    check_linearizable_bounded(history, spec, DEFAULT_BOUND)
}

pub fn check_linearizable_bounded(
    history: &[HistoryEvent],
    spec: &SequentialSpec,
    bound: usize,
) -> Result<Verdict, LinearizabilityError> {
    let ops = operations_from_history(history)?;
    if ops.len() > bound {
        return Err(LinearizabilityError::SearchBudgetExceeded {
            ops: ops.len(),
            bound,
        });
    }
    let render = |order: &[usize]| {
        order
            .iter()
            .map(|&i| ops[i].to_string())
            .collect::<Vec<_>>()
            .join(", ")
    };
    Ok(match linearize_by_search(&ops, spec) {
        Some(order) => Verdict::pass("linearizability").with_detail(render(&order)),
        None => Verdict::fail(
            "linearizability",
            format!(
                "no legal sequential order of [{}]",
                ops.iter()
                    .map(ToString::to_string)
                    .collect::<Vec<_>>()
                    .join(", ")
            ),
        ),
    })
}
