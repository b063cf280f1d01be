use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use super::Op;

/// Symmetric conflict relation over operations. A reflexive pair `(a, a)`
/// means two occurrences of `a` do not commute.
#[derive(Clone, Default)]
pub struct ConflictRelation {
    pairs: Arc<BTreeSet<(Op, Op)>>,
}

impl ConflictRelation {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Symmetric closure of the given pairs.
    pub fn new(pairs: impl IntoIterator<Item = (Op, Op)>) -> Self {
        let mut set = BTreeSet::new();
        for (a, b) in pairs {
            set.insert((a, b));
            set.insert((b, a));
        }
        ConflictRelation {
            pairs: Arc::new(set),
        }
    }

    /// Every pair of the given operations conflicts, including each with itself.
    pub fn total(ops: &[Op]) -> Self {
        Self::new(ops.iter().flat_map(|&a| ops.iter().map(move |&b| (a, b))))
    }

    pub fn conflicts(&self, a: Op, b: Op) -> bool {
        self.pairs.contains(&(a, b))
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Ordered pairs; both orientations of every conflict are present.
    pub fn pairs(&self) -> impl Iterator<Item = (Op, Op)> + '_ {
        self.pairs.iter().copied()
    }

    /// Unordered pairs, each listed once with the smaller operation first.
    pub fn unordered_pairs(&self) -> Vec<(Op, Op)> {
        self.pairs.iter().copied().filter(|(a, b)| a <= b).collect()
    }

    pub fn is_symmetric(&self) -> bool {
        self.pairs
            .iter()
            .all(|&(a, b)| self.pairs.contains(&(b, a)))
    }
}

impl PartialEq for ConflictRelation {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.pairs, &other.pairs) || self.pairs == other.pairs
    }
}

impl Eq for ConflictRelation {}

impl fmt::Debug for ConflictRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set()
            .entries(
                self.unordered_pairs()
                    .iter()
                    .map(|(a, b)| format!("{a}≍{b}")),
            )
            .finish()
    }
}
