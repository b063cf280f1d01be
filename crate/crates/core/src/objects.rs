//! Sequential object specifications and their conflict relations.

use std::collections::BTreeSet;
use std::fmt;

use serde::ser::{Serialize, Serializer};
use thiserror::Error;

use crate::trace::{ConflictRelation, Letter, Op};

/// Names accepted by [`spec_by_name`].
pub const SPEC_NAMES: &[&str] = &[
    "counter",
    "counter-updates-only",
    "total-conflict-queue",
    "grow-set",
    "register",
];

/// Object state.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum State {
    Int(i64),
    List(Vec<i64>),
    Set(BTreeSet<i64>),
}

/// Operation response. Updates answer [`Response::Ack`].
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Response {
    Ack,
    Int(i64),
    Bool(bool),
    Empty,
}

impl fmt::Display for Response {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Response::Ack => f.write_str("ok"),
            Response::Int(v) => write!(f, "{v}"),
            Response::Bool(b) => write!(f, "{b}"),
            Response::Empty => f.write_str("empty"),
        }
    }
}

impl Serialize for Response {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpecError {
    #[error("operation {op} is undefined in state {state}")]
    Undefined { op: Op, state: String },
    #[error("unknown object specification {0:?}")]
    UnknownSpec(String),
    #[error("operation {op:?} is not an operation of {spec}")]
    UnknownOp { spec: &'static str, op: String },
}

type Transition = fn(Op, &State) -> Option<(Response, State)>;

/// A sequential data type `(Q, q0, O, R, σ)` with its declared conflicts.
#[derive(Clone)]
pub struct SequentialSpec {
    name: &'static str,
    initial: State,
    operations: Vec<Op>,
    transition: Transition,
    conflicts: ConflictRelation,
    window: fn() -> Vec<State>,
}

impl fmt::Debug for SequentialSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SequentialSpec")
            .field("name", &self.name)
            .field("operations", &self.operations)
            .field("conflicts", &self.conflicts)
            .finish()
    }
}

impl SequentialSpec {
    pub fn name(&self) -> &'static str {
        self.name
    }

    pub fn initial(&self) -> &State {
        &self.initial
    }

    pub fn operations(&self) -> &[Op] {
        &self.operations
    }

    pub fn conflicts(&self) -> &ConflictRelation {
        &self.conflicts
    }

    /// A finite window of states used to cross-check the declared relation.
    pub fn state_window(&self) -> Vec<State> {
        (self.window)()
    }

    pub fn op(&self, name: &str) -> Result<Op, SpecError> {
        self.operations
            .iter()
            .copied()
            .find(|o| o.name() == name)
            .ok_or_else(|| SpecError::UnknownOp {
                spec: self.name,
                op: name.to_string(),
            })
    }

    pub fn apply(&self, op: Op, state: &State) -> Result<(Response, State), SpecError> {
        (self.transition)(op, state).ok_or_else(|| SpecError::Undefined {
            op,
            state: format!("{state:?}"),
        })
    }
}

pub fn spec_by_name(name: &str) -> Result<SequentialSpec, SpecError> {
    match name {
        "counter" => Ok(counter_spec()),
        "counter-updates-only" => Ok(degenerate_specs().1),
        "total-conflict-queue" => Ok(degenerate_specs().0),
        "grow-set" => Ok(grow_set_spec()),
        "register" => Ok(register_spec()),
        other => Err(SpecError::UnknownSpec(other.to_string())),
    }
}

pub const READ: Op = Op("read");
pub const INC: Op = Op("inc");
pub const DEC: Op = Op("dec");

fn counter_transition(op: Op, q: &State) -> Option<(Response, State)> {
    let State::Int(v) = q else { return None };
    match op.name() {
        "read" => Some((Response::Int(*v), q.clone())),
        "inc" => Some((Response::Ack, State::Int(v + 1))),
        "dec" => Some((Response::Ack, State::Int(v - 1))),
        _ => None,
    }
}

fn int_window() -> Vec<State> {
    (-2..=2).map(State::Int).collect()
}

/// Integer counter from 0 with `read`, `inc` and `dec`. Reads conflict with
/// updates; updates commute with each other.
pub fn counter_spec() -> SequentialSpec {
    SequentialSpec {
        name: "counter",
        initial: State::Int(0),
        operations: vec![READ, INC, DEC],
        transition: counter_transition,
        conflicts: ConflictRelation::new([(READ, INC), (READ, DEC)]),
        window: int_window,
    }
}

pub const ENQ1: Op = Op("enq1");
pub const ENQ2: Op = Op("enq2");
pub const DEQ: Op = Op("deq");

fn queue_transition(op: Op, q: &State) -> Option<(Response, State)> {
    let State::List(items) = q else { return None };
    let mut next = items.clone();
    match op.name() {
        "enq1" | "enq2" => {
            next.push(if op == ENQ1 { 1 } else { 2 });
            Some((Response::Ack, State::List(next)))
        }
        "deq" => {
            if next.is_empty() {
                Some((Response::Empty, q.clone()))
            } else {
                let head = next.remove(0);
                Some((Response::Int(head), State::List(next)))
            }
        }
        _ => None,
    }
}

fn queue_window() -> Vec<State> {
    vec![
        State::List(vec![]),
        State::List(vec![1]),
        State::List(vec![2]),
        State::List(vec![1, 2]),
        State::List(vec![2, 1]),
    ]
}

/// The two degenerate objects: a FIFO queue whose declared relation is total,
/// and an update-only counter whose relation is empty.
pub fn degenerate_specs() -> (SequentialSpec, SequentialSpec) {
    let queue_ops = vec![ENQ1, ENQ2, DEQ];
    let queue = SequentialSpec {
        name: "total-conflict-queue",
        initial: State::List(vec![]),
        conflicts: ConflictRelation::total(&queue_ops),
        operations: queue_ops,
        transition: queue_transition,
        window: queue_window,
    };
    let updates = SequentialSpec {
        name: "counter-updates-only",
        initial: State::Int(0),
        operations: vec![INC, DEC],
        transition: counter_transition,
        conflicts: ConflictRelation::empty(),
        window: int_window,
    };
    (queue, updates)
}

pub const ADD1: Op = Op("add1");
pub const ADD2: Op = Op("add2");
pub const HAS1: Op = Op("has1");
pub const HAS2: Op = Op("has2");

fn grow_set_transition(op: Op, q: &State) -> Option<(Response, State)> {
    let State::Set(items) = q else { return None };
    match op.name() {
        "add1" | "add2" => {
            let mut next = items.clone();
            next.insert(if op == ADD1 { 1 } else { 2 });
            Some((Response::Ack, State::Set(next)))
        }
        "has1" => Some((Response::Bool(items.contains(&1)), q.clone())),
        "has2" => Some((Response::Bool(items.contains(&2)), q.clone())),
        _ => None,
    }
}

fn grow_set_window() -> Vec<State> {
    [vec![], vec![1], vec![2], vec![1, 2]]
        .into_iter()
        .map(|v| State::Set(v.into_iter().collect()))
        .collect()
}

/// Grow-only set over `{1, 2}`: membership tests conflict only with adding
/// the same element.
pub fn grow_set_spec() -> SequentialSpec {
    SequentialSpec {
        name: "grow-set",
        initial: State::Set(BTreeSet::new()),
        operations: vec![ADD1, ADD2, HAS1, HAS2],
        transition: grow_set_transition,
        conflicts: ConflictRelation::new([(ADD1, HAS1), (ADD2, HAS2)]),
        window: grow_set_window,
    }
}

pub const WRITE0: Op = Op("write0");
pub const WRITE1: Op = Op("write1");

fn register_transition(op: Op, q: &State) -> Option<(Response, State)> {
    let State::Int(v) = q else { return None };
    match op.name() {
        "read" => Some((Response::Int(*v), q.clone())),
        "write0" => Some((Response::Ack, State::Int(0))),
        "write1" => Some((Response::Ack, State::Int(1))),
        _ => None,
    }
}

/// Binary read/write register initialized to 0.
pub fn register_spec() -> SequentialSpec {
    SequentialSpec {
        name: "register",
        initial: State::Int(0),
        operations: vec![READ, WRITE0, WRITE1],
        transition: register_transition,
        conflicts: ConflictRelation::new([(WRITE0, WRITE1), (READ, WRITE0), (READ, WRITE1)]),
        window: || vec![State::Int(0), State::Int(1)],
    }
}

/// Whether `a` and `b` commute in `q`: both orders give the same responses and
/// the same final state.
pub fn commute_in(spec: &SequentialSpec, a: Op, b: Op, q: &State) -> bool {
    let ab = spec
        .apply(a, q)
        .and_then(|(ra, q1)| spec.apply(b, &q1).map(|(rb, q2)| (ra, rb, q2)));
    let ba = spec
        .apply(b, q)
        .and_then(|(rb, q1)| spec.apply(a, &q1).map(|(ra, q2)| (ra, rb, q2)));
    matches!((ab, ba), (Ok(x), Ok(y)) if x == y)
}

/// Pairs of operations that fail to commute in at least one of the given states.
pub fn derive_conflicts(spec: &SequentialSpec, states: &[State]) -> ConflictRelation {
    let ops = spec.operations();
    let mut pairs = Vec::new();
    for (k, &a) in ops.iter().enumerate() {
        for &b in &ops[k..] {
            if states.iter().any(|q| !commute_in(spec, a, b, q)) {
                pairs.push((a, b));
            }
        }
    }
    ConflictRelation::new(pairs)
}

/// Process identifier in `1..=n`.
pub type ProcessId = usize;

/// A uniquely identified operation instance `(op, process, seq)`. Commands
/// conflict exactly when their operations do.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Command {
    pub op: Op,
    pub process: ProcessId,
    pub seq: u64,
}

impl Command {
    pub fn new(op: Op, process: ProcessId, seq: u64) -> Self {
        Command { op, process, seq }
    }
}

impl Letter for Command {
    fn op(&self) -> Op {
        self.op
    }
}

impl PartialOrd for Command {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Command {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.process, self.seq, self.op).cmp(&(other.process, other.seq, other.op))
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.op, self.process, self.seq)
    }
}

impl Serialize for Command {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::oracle::{all_schedules, Oracle};

    #[test]
    fn counter_transitions() {
        let c = counter_spec();
        assert_eq!(
            c.apply(INC, &State::Int(0)).unwrap(),
            (Response::Ack, State::Int(1))
        );
        assert_eq!(
            c.apply(READ, &State::Int(5)).unwrap(),
            (Response::Int(5), State::Int(5))
        );
        assert_eq!(
            c.apply(DEC, &State::Int(0)).unwrap(),
            (Response::Ack, State::Int(-1))
        );
    }

    #[test]
    fn counter_declared_conflicts() {
        let c = counter_spec();
        assert!(c.conflicts().conflicts(READ, INC));
        assert!(c.conflicts().conflicts(INC, READ));
        assert!(c.conflicts().conflicts(READ, DEC));
        assert!(!c.conflicts().conflicts(INC, DEC));
        assert!(!c.conflicts().conflicts(INC, INC));
        assert!(!c.conflicts().conflicts(READ, READ));
    }

    #[test]
    fn derived_counter_conflicts_match_declared() {
        let c = counter_spec();
        let window: Vec<State> = (-2..=2).map(State::Int).collect();
        let derived = derive_conflicts(&c, &window);
        assert_eq!(derived.unordered_pairs(), vec![(DEC, READ), (INC, READ)]);
        assert_eq!(&derived, c.conflicts());
    }

    #[test]
    fn empty_window_derives_nothing() {
        for name in SPEC_NAMES {
            let spec = spec_by_name(name).unwrap();
            assert!(derive_conflicts(&spec, &[]).is_empty());
        }
    }

    #[test]
    fn register_writes_conflict() {
        let r = register_spec();
        let derived = derive_conflicts(&r, &[State::Int(0), State::Int(1)]);
        assert!(derived.conflicts(WRITE0, WRITE1));
        assert!(derived.conflicts(READ, WRITE1));
        assert!(!derived.conflicts(WRITE0, WRITE0));
        assert_eq!(&derived, r.conflicts());
    }

    #[test]
    fn declared_relations_agree_with_windows() {
        // The total-conflict queue declares more than its window derives.
        for name in ["counter", "counter-updates-only", "grow-set", "register"] {
            let spec = spec_by_name(name).unwrap();
            assert_eq!(
                &derive_conflicts(&spec, &spec.state_window()),
                spec.conflicts(),
                "{name}"
            );
        }
        let (queue, updates) = degenerate_specs();
        let derived = derive_conflicts(&queue, &queue.state_window());
        assert!(derived
            .pairs()
            .all(|(a, b)| queue.conflicts().conflicts(a, b)));
        for &a in queue.operations() {
            for &b in queue.operations() {
                assert!(queue.conflicts().conflicts(a, b));
            }
        }
        assert!(updates.conflicts().is_empty());
    }

    #[test]
    fn update_only_schedules_with_equal_counts_are_equivalent() {
        let (_, updates) = degenerate_specs();
        let mut oracle = Oracle::new(updates.conflicts());
        let length4: Vec<Vec<Op>> = all_schedules(&[INC, DEC], 4)
            .into_iter()
            .filter(|s| s.len() == 4)
            .collect();
        for s in &length4 {
            for t in &length4 {
                let same_counts = s.iter().filter(|o| **o == INC).count()
                    == t.iter().filter(|o| **o == INC).count();
                assert_eq!(oracle.equivalent(s, t), same_counts, "{s:?} vs {t:?}");
            }
        }
    }

    #[test]
    fn derived_relations_are_symmetric() {
        for name in SPEC_NAMES {
            let spec = spec_by_name(name).unwrap();
            assert!(derive_conflicts(&spec, &spec.state_window()).is_symmetric());
            assert!(spec.conflicts().is_symmetric());
        }
    }

    #[test]
    fn command_conflicts_follow_operations() {
        let c = counter_spec();
        let ops = c.operations();
        for &a in ops {
            for &b in ops {
                let ca = Command::new(a, 1, 1);
                let cb = Command::new(b, 2, 7);
                assert_eq!(
                    c.conflicts().conflicts(ca.op(), cb.op()),
                    c.conflicts().conflicts(a, b)
                );
            }
        }
    }

    #[test]
    fn unknown_names_are_rejected() {
        assert!(matches!(
            spec_by_name("stack"),
            Err(SpecError::UnknownSpec(_))
        ));
        assert!(counter_spec().op("write0").is_err());
        assert_eq!(counter_spec().op("inc").unwrap(), INC);
    }
}
