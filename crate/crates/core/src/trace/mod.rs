//! Traces over a partially commutative alphabet.
//!
//! A schedule is a plain sequence of letters. Two schedules are equivalent when
//! they contain the same letters and order every pair of conflicting occurrences
//! the same way; a [`Trace`] is the resulting equivalence class. Each trace is
//! stored as its lexicographically least representative, so trace equality is
//! sequence equality.
//!
//! The prefix order on traces (`t <= u` iff `u = t . z` for some `z`) is the
//! backbone of the commit-adopt object and the universal constructions: every
//! set of traces has a greatest lower bound ([`glb`]) and every compatible set
//! has a least upper bound ([`lub`]).
//!
//! All operations here work on explicit representatives by "peeling" letters
//! off the front of a schedule: a letter can be peeled when its first
//! occurrence is preceded only by letters it commutes with. The brute-force
//! [`oracle`] module provides an independent ground truth for all of them.

use std::collections::BTreeMap;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use serde::ser::{Serialize, SerializeSeq, Serializer};
use thiserror::Error;

use crate::objects::{Response, SequentialSpec, SpecError, State};

pub mod oracle;

mod relation;

pub use relation::ConflictRelation;

/// Operation symbol of a sequential object.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Op(pub &'static str);

impl Op {
    pub fn name(self) -> &'static str {
        self.0
    }
}

impl fmt::Debug for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.0)
    }
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.0)
    }
}

impl Serialize for Op {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.0)
    }
}

/// A letter of a schedule. Letters are compared by identity; the conflict
/// relation only looks at the underlying operation.
pub trait Letter: Clone + Ord + Hash + fmt::Debug + fmt::Display {
    fn op(&self) -> Op;
}

impl Letter for Op {
    fn op(&self) -> Op {
        *self
    }
}

/// Multiset of letters, as counts.
pub type Multiset<L> = BTreeMap<L, usize>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TraceError {
    #[error("traces are defined over different conflict relations")]
    RelationMismatch,
    #[error("trace is not a prefix of the other trace")]
    NotAPrefix,
    #[error("set of traces has no common extension")]
    Incompatible,
    #[error("bound of an empty set of traces")]
    EmptySet,
    #[error("occurrence {letter}^({index}) does not appear in the trace")]
    OccurrenceNotFound { letter: String, index: usize },
    #[error("oracle bound exceeded: trace of length {len} with bound {bound}")]
    OracleBoundExceeded { len: usize, bound: usize },
    #[error(transparent)]
    Spec(#[from] SpecError),
}

/// The `index`-th occurrence (1-based) of `letter`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OccurrenceRef<L> {
    pub letter: L,
    pub index: usize,
}

impl<L> OccurrenceRef<L> {
    pub fn first(letter: L) -> Self {
        OccurrenceRef { letter, index: 1 }
    }

    pub fn new(letter: L, index: usize) -> Self {
        OccurrenceRef { letter, index }
    }
}

/// Equivalence class of schedules, stored in canonical form.
#[derive(Clone)]
pub struct Trace<L> {
    canonical: Arc<[L]>,
    conflicts: ConflictRelation,
}

impl<L: Letter> Trace<L> {
    /// The empty trace.
    pub fn empty(conflicts: &ConflictRelation) -> Self {
        Trace {
            canonical: Arc::from(Vec::new()),
            conflicts: conflicts.clone(),
        }
    }

    /// Class of a single letter.
    pub fn singleton(letter: L, conflicts: &ConflictRelation) -> Self {
        Trace {
            canonical: Arc::from(vec![letter]),
            conflicts: conflicts.clone(),
        }
    }

    pub fn from_schedule(schedule: &[L], conflicts: &ConflictRelation) -> Self {
        normalize(schedule, conflicts)
    }

    /// The canonical (lexicographically least) representative.
    pub fn letters(&self) -> &[L] {
        &self.canonical
    }

    pub fn conflicts(&self) -> &ConflictRelation {
        &self.conflicts
    }

    pub fn len(&self) -> usize {
        self.canonical.len()
    }

    pub fn is_empty(&self) -> bool {
        self.canonical.is_empty()
    }

    pub fn contains(&self, letter: &L) -> bool {
        self.canonical.contains(letter)
    }

    pub fn count(&self, letter: &L) -> usize {
        self.canonical.iter().filter(|l| *l == letter).count()
    }

    pub fn ops(&self) -> Multiset<L> {
        multiset(&self.canonical)
    }

    pub fn concat(&self, other: &Trace<L>) -> Result<Trace<L>, TraceError> {
        concat(self, other)
    }

    /// `self . [letter]`.
    pub fn append(&self, letter: L) -> Trace<L> {
        let mut seq = self.canonical.to_vec();
        seq.push(letter);
        normalize(&seq, &self.conflicts)
    }

    pub fn is_prefix_of(&self, other: &Trace<L>) -> bool {
        is_prefix(self, other)
    }

    /// Strings of the canonical representative, for reports.
    pub fn symbols(&self) -> Vec<String> {
        self.canonical.iter().map(|l| l.to_string()).collect()
    }
}

impl<L: PartialEq> PartialEq for Trace<L> {
    fn eq(&self, other: &Self) -> bool {
        self.canonical == other.canonical && self.conflicts == other.conflicts
    }
}

impl<L: Eq> Eq for Trace<L> {}

impl<L: Hash> Hash for Trace<L> {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.canonical.hash(state);
    }
}

// Ordering is only meaningful between traces over the same relation; it is
// used for deterministic containers.
impl<L: Ord> PartialOrd for Trace<L> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl<L: Ord> Ord for Trace<L> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.canonical.cmp(&other.canonical)
    }
}

impl<L: fmt::Display> fmt::Display for Trace<L> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.canonical.is_empty() {
            return f.write_str("ε");
        }
        f.write_str("[")?;
        for (k, l) in self.canonical.iter().enumerate() {
            if k > 0 {
                f.write_str("·")?;
            }
            write!(f, "{l}")?;
        }
        f.write_str("]")
    }
}

impl<L: fmt::Display> fmt::Debug for Trace<L> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl<L: fmt::Display> Serialize for Trace<L> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.canonical.len()))?;
        for l in self.canonical.iter() {
            seq.serialize_element(&l.to_string())?;
        }
        seq.end()
    }
}

pub fn multiset<L: Letter>(letters: &[L]) -> Multiset<L> {
    let mut m = Multiset::new();
    for l in letters {
        *m.entry(l.clone()).or_insert(0) += 1;
    }
    m
}

/// `a` is contained in `b` as multisets.
pub fn multiset_le<L: Ord>(a: &Multiset<L>, b: &Multiset<L>) -> bool {
    a.iter().all(|(l, k)| b.get(l).is_some_and(|kb| kb >= k))
}

#[inline]
fn depends<L: Letter>(conflicts: &ConflictRelation, a: &L, b: &L) -> bool {
    a == b || conflicts.conflicts(a.op(), b.op())
}

/// Positions of `seq` whose letter can be moved to the front: the first
/// occurrence of its letter, preceded only by commuting letters.
fn front_positions<L: Letter>(seq: &[L], conflicts: &ConflictRelation) -> Vec<usize> {
    (0..seq.len())
        .filter(|&j| !seq[..j].iter().any(|x| depends(conflicts, x, &seq[j])))
        .collect()
}

/// Position of the first occurrence of `letter` if it can be moved to the front.
fn front_position<L: Letter>(seq: &[L], letter: &L, conflicts: &ConflictRelation) -> Option<usize> {
    for (p, x) in seq.iter().enumerate() {
        if x == letter {
            return Some(p);
        }
        if conflicts.conflicts(x.op(), letter.op()) {
            return None;
        }
    }
    None
}

/// Removes `letter` from the front of the class of `seq`, if possible.
fn peel<L: Letter>(seq: &mut Vec<L>, letter: &L, conflicts: &ConflictRelation) -> bool {
    match front_position(seq, letter, conflicts) {
        Some(p) => {
            seq.remove(p);
            true
        }
        None => false,
    }
}

fn same_relation<L>(traces: &[&Trace<L>]) -> Result<(), TraceError> {
    match traces.split_first() {
        Some((first, rest)) if rest.iter().any(|t| t.conflicts != first.conflicts) => {
            Err(TraceError::RelationMismatch)
        }
        _ => Ok(()),
    }
}

/// Canonical trace of a schedule: repeatedly emit the least letter whose next
/// occurrence has no pending conflicting occurrence before it.
pub fn normalize<L: Letter>(schedule: &[L], conflicts: &ConflictRelation) -> Trace<L> {
    let n = schedule.len();
    let mut used = vec![false; n];
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let mut best: Option<usize> = None;
        for j in 0..n {
            if used[j] {
                continue;
            }
            if best.is_some_and(|b| schedule[b] <= schedule[j]) {
                continue;
            }
            let blocked =
                (0..j).any(|k| !used[k] && depends(conflicts, &schedule[k], &schedule[j]));
            if !blocked {
                best = Some(j);
            }
        }
        let j = best.expect("an unconsumed occurrence with no pending predecessor exists");
        used[j] = true;
        out.push(schedule[j].clone());
    }
    Trace {
        canonical: Arc::from(out),
        conflicts: conflicts.clone(),
    }
}

pub fn equivalent<L: Letter>(s: &[L], t: &[L], conflicts: &ConflictRelation) -> bool {
    s.len() == t.len() && normalize(s, conflicts) == normalize(t, conflicts)
}

pub fn concat<L: Letter>(t: &Trace<L>, u: &Trace<L>) -> Result<Trace<L>, TraceError> {
    same_relation(&[t, u])?;
    let mut seq = t.canonical.to_vec();
    seq.extend(u.canonical.iter().cloned());
    Ok(normalize(&seq, &t.conflicts))
}

pub fn is_prefix<L: Letter>(t: &Trace<L>, u: &Trace<L>) -> bool {
    debug_assert!(
        t.conflicts == u.conflicts,
        "prefix test across conflict relations"
    );
    strip(t, u).is_some()
}

fn strip<L: Letter>(t: &Trace<L>, u: &Trace<L>) -> Option<Vec<L>> {
    if t.len() > u.len() || t.conflicts != u.conflicts {
        return None;
    }
    let mut rest = u.canonical.to_vec();
    for x in t.canonical.iter() {
        if !peel(&mut rest, x, &t.conflicts) {
            return None;
        }
    }
    Some(rest)
}

/// The unique `z` with `t . z = u`.
pub fn residual<L: Letter>(t: &Trace<L>, u: &Trace<L>) -> Result<Trace<L>, TraceError> {
    same_relation(&[t, u])?;
    strip(t, u)
        .map(|rest| normalize(&rest, &t.conflicts))
        .ok_or(TraceError::NotAPrefix)
}

/// Greatest lower bound: peel, one at a time, a letter that can be moved to
/// the front of every member.
pub fn glb<L: Letter>(set: &[Trace<L>]) -> Result<Trace<L>, TraceError> {
    let (first, _) = set.split_first().ok_or(TraceError::EmptySet)?;
    same_relation(&set.iter().collect::<Vec<_>>())?;
    let conflicts = &first.conflicts;
    let mut rests: Vec<Vec<L>> = set.iter().map(|t| t.canonical.to_vec()).collect();
    let mut out = Vec::new();
    loop {
        let candidates = front_positions(&rests[0], conflicts);
        let pick = candidates
            .into_iter()
            .map(|p| rests[0][p].clone())
            .find(|x| {
                rests[1..]
                    .iter()
                    .all(|r| front_position(r, x, conflicts).is_some())
            });
        let Some(x) = pick else { break };
        for r in rests.iter_mut() {
            let peeled = peel(r, &x, conflicts);
            debug_assert!(peeled);
        }
        out.push(x);
    }
    Ok(normalize(&out, conflicts))
}

/// Least upper bound of a compatible set, folded pairwise: the bound of `x`
/// and `y` is `x` extended by what `y` adds over their common prefix.
pub fn lub<L: Letter>(set: &[Trace<L>]) -> Result<Trace<L>, TraceError> {
    let (first, rest) = set.split_first().ok_or(TraceError::EmptySet)?;
    same_relation(&set.iter().collect::<Vec<_>>())?;
    let mut acc = first.clone();
    for y in rest {
        let common = glb(&[acc.clone(), y.clone()])?;
        let extra = residual(&common, y)?;
        let candidate = concat(&acc, &extra)?;
        if !is_prefix(y, &candidate) {
            return Err(TraceError::Incompatible);
        }
        acc = candidate;
    }
    Ok(acc)
}

/// Whether the set admits a common extension. The empty set is compatible.
pub fn compatible<L: Letter>(set: &[Trace<L>]) -> bool {
    set.is_empty() || lub(set).is_ok()
}

/// Responses and states along a schedule, from `q0`.
pub fn sigma_star_schedule<L: Letter>(
    schedule: &[L],
    q0: &State,
    spec: &SequentialSpec,
) -> Result<Vec<(Response, State)>, SpecError> {
    let mut q = q0.clone();
    let mut out = Vec::with_capacity(schedule.len());
    for l in schedule {
        let (r, next) = spec.apply(l.op(), &q)?;
        out.push((r, next.clone()));
        q = next;
    }
    Ok(out)
}

/// Responses and states along the canonical representative of `t`.
pub fn sigma_star<L: Letter>(
    t: &Trace<L>,
    q0: &State,
    spec: &SequentialSpec,
) -> Result<Vec<(Response, State)>, SpecError> {
    sigma_star_schedule(t.letters(), q0, spec)
}

/// Return value of an occurrence in a raw schedule, from the spec's initial state.
pub fn ret_star_schedule<L: Letter>(
    occ: &OccurrenceRef<L>,
    schedule: &[L],
    spec: &SequentialSpec,
) -> Result<Response, TraceError> {
    let pos = schedule
        .iter()
        .enumerate()
        .filter(|(_, l)| **l == occ.letter)
        .nth(occ.index.wrapping_sub(1))
        .map(|(p, _)| p)
        .ok_or_else(|| TraceError::OccurrenceNotFound {
            letter: occ.letter.to_string(),
            index: occ.index,
        })?;
    let evaluated = sigma_star_schedule(&schedule[..=pos], spec.initial(), spec)?;
    Ok(evaluated[pos].0.clone())
}

pub fn ret_star<L: Letter>(
    occ: &OccurrenceRef<L>,
    t: &Trace<L>,
    spec: &SequentialSpec,
) -> Result<Response, TraceError> {
    ret_star_schedule(occ, t.letters(), spec)
}

#[cfg(test)]
mod tests;
