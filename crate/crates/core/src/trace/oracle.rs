//! Brute-force ground truth for the trace algebra.
//!
//! Everything here is computed from explicit representative sets, obtained by
//! closing a schedule under swaps of adjacent commuting occurrences. Nothing in
//! this module calls the canonical-form machinery of the parent module, so it
//! can serve as an independent check of it. It is exponential and intended for
//! schedules of length at most [`DEFAULT_BOUND`] or so.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};
use std::rc::Rc;

use super::{ConflictRelation, Letter, Trace, TraceError};

pub const DEFAULT_BOUND: usize = 8;

pub type Class<L> = Rc<BTreeSet<Vec<L>>>;

/// All schedules equivalent to `t`, by adjacent-swap closure.
pub fn oracle_representatives<L: Letter>(
    t: &Trace<L>,
    bound: usize,
) -> Result<BTreeSet<Vec<L>>, TraceError> {
    if t.len() > bound {
        return Err(TraceError::OracleBoundExceeded {
            len: t.len(),
            bound,
        });
    }
    Ok(swap_closure(t.letters(), t.conflicts()))
}

/// Closure of `s` under swaps of adjacent, distinct, non-conflicting letters.
pub fn swap_closure<L: Letter>(s: &[L], conflicts: &ConflictRelation) -> BTreeSet<Vec<L>> {
    let mut seen = BTreeSet::new();
    let mut queue = VecDeque::new();
    seen.insert(s.to_vec());
    queue.push_back(s.to_vec());
    while let Some(cur) = queue.pop_front() {
        for k in 0..cur.len().saturating_sub(1) {
            let (a, b) = (&cur[k], &cur[k + 1]);
            if a == b || conflicts.conflicts(a.op(), b.op()) {
                continue;
            }
            let mut next = cur.clone();
            next.swap(k, k + 1);
            if seen.insert(next.clone()) {
                queue.push_back(next);
            }
        }
    }
    seen
}

/// Memoizing brute-force evaluator over one conflict relation.
pub struct Oracle<L> {
    conflicts: ConflictRelation,
    classes: HashMap<Vec<L>, Class<L>>,
}

impl<L: Letter> Oracle<L> {
    pub fn new(conflicts: &ConflictRelation) -> Self {
        Oracle {
            conflicts: conflicts.clone(),
            classes: HashMap::new(),
        }
    }

    pub fn conflicts(&self) -> &ConflictRelation {
        &self.conflicts
    }

    pub fn class(&mut self, s: &[L]) -> Class<L> {
        if let Some(c) = self.classes.get(s) {
            return c.clone();
        }
        let class = Rc::new(swap_closure(s, &self.conflicts));
        for rep in class.iter() {
            self.classes.insert(rep.clone(), class.clone());
        }
        class
    }

    /// Least representative of the class of `s`.
    pub fn least(&mut self, s: &[L]) -> Vec<L> {
        self.class(s)
            .iter()
            .next()
            .cloned()
            .expect("a class contains its generator")
    }

    pub fn equivalent(&mut self, s: &[L], t: &[L]) -> bool {
        s.len() == t.len() && self.class(s).contains(t)
    }

    /// Some representative of `u` starts with some representative of `t`.
    pub fn is_prefix(&mut self, t: &[L], u: &[L]) -> bool {
        if t.len() > u.len() {
            return false;
        }
        let tc = self.class(t);
        let uc = self.class(u);
        uc.iter().any(|r| tc.contains(&r[..t.len()]))
    }

    /// Every suffix `z` such that some representative of `u` is `t' . z` with
    /// `t'` a representative of `t`. Empty when `t` is not a prefix of `u`.
    pub fn residuals(&mut self, t: &[L], u: &[L]) -> Vec<Vec<L>> {
        if t.len() > u.len() {
            return Vec::new();
        }
        let tc = self.class(t);
        let uc = self.class(u);
        uc.iter()
            .filter(|r| tc.contains(&r[..t.len()]))
            .map(|r| r[t.len()..].to_vec())
            .collect()
    }

    /// All schedules that are prefixes (in the trace sense) of every member.
    pub fn common_prefixes(&mut self, members: &[Vec<L>]) -> Vec<Vec<L>> {
        let Some((first, rest)) = members.split_first() else {
            return Vec::new();
        };
        let mut candidates = BTreeSet::new();
        for rep in self.class(first).iter() {
            for k in 0..=rep.len() {
                candidates.insert(rep[..k].to_vec());
            }
        }
        candidates
            .into_iter()
            .filter(|c| rest.iter().all(|m| self.is_prefix(c, m)))
            .collect()
    }

    /// A longest common prefix. Tests check separately that all longest
    /// common prefixes are equivalent.
    pub fn glb(&mut self, members: &[Vec<L>]) -> Vec<L> {
        self.common_prefixes(members)
            .into_iter()
            .max_by(|a, b| a.len().cmp(&b.len()).then_with(|| b.cmp(a)))
            .unwrap_or_default()
    }

    /// All upper bounds of minimal length, searched over every arrangement of
    /// every multiset between the per-letter maximum and the sum of the
    /// members' letters. Empty iff the set is incompatible.
    pub fn minimal_upper_bounds(&mut self, members: &[Vec<L>]) -> Vec<Vec<L>> {
        let mut max: BTreeMap<L, usize> = BTreeMap::new();
        let mut sum: BTreeMap<L, usize> = BTreeMap::new();
        for m in members {
            let mut counts: BTreeMap<L, usize> = BTreeMap::new();
            for l in m {
                *counts.entry(l.clone()).or_insert(0) += 1;
            }
            for (l, k) in counts {
                let e = max.entry(l.clone()).or_insert(0);
                *e = (*e).max(k);
                *sum.entry(l).or_insert(0) += k;
            }
        }
        let letters: Vec<L> = max.keys().cloned().collect();
        let ranges: Vec<(usize, usize)> = letters.iter().map(|l| (max[l], sum[l])).collect();
        let mut by_size: BTreeMap<usize, Vec<Vec<usize>>> = BTreeMap::new();
        for counts in count_vectors(&ranges) {
            by_size.entry(counts.iter().sum()).or_default().push(counts);
        }
        for (_, level) in by_size {
            let mut found = Vec::new();
            for counts in level {
                let mut visited: HashSet<Vec<L>> = HashSet::new();
                for perm in arrangements(&letters, &counts) {
                    if visited.contains(&perm) {
                        continue;
                    }
                    let class = self.class(&perm);
                    visited.extend(class.iter().cloned());
                    let upper = members.iter().all(|m| {
                        let mc = self.class(m);
                        class.iter().any(|r| mc.contains(&r[..m.len()]))
                    });
                    if upper {
                        found.push(perm);
                    }
                }
            }
            if !found.is_empty() {
                return found;
            }
        }
        Vec::new()
    }

    pub fn lub(&mut self, members: &[Vec<L>]) -> Option<Vec<L>> {
        self.minimal_upper_bounds(members).into_iter().next()
    }

    pub fn compatible(&mut self, members: &[Vec<L>]) -> bool {
        members.is_empty() || self.lub(members).is_some()
    }
}

fn count_vectors(ranges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for &(lo, hi) in ranges {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (lo..=hi).map(move |k| {
                    let mut v = prefix.clone();
                    v.push(k);
                    v
                })
            })
            .collect();
    }
    out
}

/// Distinct arrangements of the multiset `letters[i]` repeated `counts[i]` times.
pub fn arrangements<L: Clone>(letters: &[L], counts: &[usize]) -> Vec<Vec<L>> {
    fn go<L: Clone>(letters: &[L], counts: &mut [usize], cur: &mut Vec<L>, out: &mut Vec<Vec<L>>) {
        if counts.iter().all(|&k| k == 0) {
            out.push(cur.clone());
            return;
        }
        for i in 0..letters.len() {
            if counts[i] == 0 {
                continue;
            }
            counts[i] -= 1;
            cur.push(letters[i].clone());
            go(letters, counts, cur, out);
            cur.pop();
            counts[i] += 1;
        }
    }
    let mut out = Vec::new();
    go(letters, &mut counts.to_vec(), &mut Vec::new(), &mut out);
    out
}

/// Every schedule over `alphabet` of length at most `max_len`, shortest first.
pub fn all_schedules<L: Clone>(alphabet: &[L], max_len: usize) -> Vec<Vec<L>> {
    let mut out = vec![Vec::new()];
    let mut frontier = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for s in &frontier {
            for l in alphabet {
                let mut t: Vec<L> = s.clone();
                t.push(l.clone());
                next.push(t);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}
