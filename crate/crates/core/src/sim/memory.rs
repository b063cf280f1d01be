//! Simulated shared objects: atomic registers and atomic snapshot objects.
//!
//! Every method here is one atomic action; the simulator charges one step per
//! call.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::gca::{Candidate, GcaInstance};
use crate::objects::{Command, ProcessId};
use crate::trace::{ConflictRelation, Trace};
use crate::uc::CommittedEntry;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Register<T> {
    value: T,
}

impl<T: Clone> Register<T> {
    pub fn new(value: T) -> Self {
        Register { value }
    }

    pub fn read(&self) -> T {
        self.value.clone()
    }

    pub fn write(&mut self, value: T) {
        self.value = value;
    }
}

/// `n` cells, each `None` (⊥) until its owner updates it. `scan` returns all
/// cells at once.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SnapshotObject<T> {
    cells: Vec<Option<T>>,
}

impl<T: Clone> SnapshotObject<T> {
    pub fn new(n: usize) -> Self {
        SnapshotObject {
            cells: vec![None; n],
        }
    }

    /// Sets the cell of process `i` (1-based).
    pub fn update(&mut self, i: ProcessId, value: T) {
        self.cells[i - 1] = Some(value);
    }

    pub fn scan(&self) -> Vec<Option<T>> {
        self.cells.clone()
    }

    pub fn cell(&self, i: ProcessId) -> Option<&T> {
        self.cells[i - 1].as_ref()
    }
}

/// One shared-memory action. Writes and updates always target the acting
/// process's own cell.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Action {
    ReadS { cell: ProcessId },
    WriteS { entry: CommittedEntry },
    ReadM { cell: ProcessId },
    WriteM { command: Command },
    UpdateA { round: u64, input: Trace<Command> },
    ScanA { round: u64 },
    UpdateB { round: u64, candidate: Candidate },
    ScanB { round: u64 },
}

impl Action {
    /// GCA round this action belongs to, if any.
    pub fn gca_round(&self) -> Option<u64> {
        match self {
            Action::UpdateA { round, .. }
            | Action::ScanA { round }
            | Action::UpdateB { round, .. }
            | Action::ScanB { round } => Some(*round),
            _ => None,
        }
    }

    /// Whether performing `self` as `p` and `other` as `q` in either order
    /// gives the same outcomes and the same final memory.
    pub fn commutes_with(&self, p: ProcessId, other: &Action, q: ProcessId) -> bool {
        let (a, b) = (self.location(p), other.location(q));
        let overlap =
            a.object == b.object && (a.cell.is_none() || b.cell.is_none() || a.cell == b.cell);
        !overlap || (!a.write && !b.write)
    }

    fn location(&self, p: ProcessId) -> Location {
        let (object, cell, write) = match self {
            Action::ReadS { cell } => (Object::S, Some(*cell), false),
            Action::WriteS { .. } => (Object::S, Some(p), true),
            Action::ReadM { cell } => (Object::M, Some(*cell), false),
            Action::WriteM { .. } => (Object::M, Some(p), true),
            Action::UpdateA { round, .. } => (Object::A(*round), Some(p), true),
            Action::ScanA { round } => (Object::A(*round), None, false),
            Action::UpdateB { round, .. } => (Object::B(*round), Some(p), true),
            Action::ScanB { round } => (Object::B(*round), None, false),
        };
        Location {
            object,
            cell,
            write,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Object {
    S,
    M,
    A(u64),
    B(u64),
}

/// A cell of `None` stands for the whole object, as touched by a scan.
struct Location {
    object: Object,
    cell: Option<ProcessId>,
    write: bool,
}

/// Result of an [`Action`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Outcome {
    Done,
    Entry(CommittedEntry),
    Announcement(Option<Command>),
    ViewA(Vec<Option<Trace<Command>>>),
    ViewB(Vec<Option<Candidate>>),
}

/// A deliberate defect of the memory, for checking that the checkers notice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fault {
    /// Snapshot scans show only the scanning process's own cell.
    IsolatedScans,
}

/// All shared objects used by the universal constructions: the committed
/// array `S`, the announcement array `M`, and the GCA instances, created on
/// first touch.
#[derive(Debug, Clone)]
pub struct SharedMemory {
    n: usize,
    conflicts: ConflictRelation,
    s: Vec<Register<CommittedEntry>>,
    m: Vec<Register<Option<Command>>>,
    gca: BTreeMap<u64, GcaInstance>,
    fault: Option<Fault>,
}

impl SharedMemory {
    pub fn new(n: usize, conflicts: &ConflictRelation) -> Self {
        SharedMemory {
            n,
            conflicts: conflicts.clone(),
            s: vec![Register::new(CommittedEntry::initial(conflicts)); n],
            m: vec![Register::new(None); n],
            gca: BTreeMap::new(),
            fault: None,
        }
    }

    pub fn inject(&mut self, fault: Fault) {
        self.fault = Some(fault);
    }

    fn isolate<T>(&self, i: ProcessId, mut view: Vec<Option<T>>) -> Vec<Option<T>> {
        if self.fault == Some(Fault::IsolatedScans) {
            for (k, cell) in view.iter_mut().enumerate() {
                if k + 1 != i {
                    *cell = None;
                }
            }
        }
        view
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn gca(&mut self, round: u64) -> &mut GcaInstance {
        let n = self.n;
        self.gca
            .entry(round)
            .or_insert_with(|| GcaInstance::new(round, n))
    }

    pub fn gca_instances(&self) -> &BTreeMap<u64, GcaInstance> {
        &self.gca
    }

    pub fn committed(&self, cell: ProcessId) -> &CommittedEntry {
        &self.s[cell - 1].value
    }

    pub fn conflicts(&self) -> &ConflictRelation {
        &self.conflicts
    }

    /// Performs `action` on behalf of process `i`.
    pub fn perform(&mut self, i: ProcessId, action: &Action) -> Outcome {
        match action {
            Action::ReadS { cell } => Outcome::Entry(self.s[cell - 1].read()),
            Action::WriteS { entry } => {
                self.s[i - 1].write(entry.clone());
                Outcome::Done
            }
            Action::ReadM { cell } => Outcome::Announcement(self.m[cell - 1].read()),
            Action::WriteM { command } => {
                self.m[i - 1].write(Some(*command));
                Outcome::Done
            }
            Action::UpdateA { round, input } => {
                self.gca(*round)
                    .write_input(i, input.clone())
                    .expect("a process proposes at most once per GCA instance");
                Outcome::Done
            }
            Action::ScanA { round } => {
                let view = self.gca(*round).inputs.scan();
                Outcome::ViewA(self.isolate(i, view))
            }
            Action::UpdateB { round, candidate } => {
                self.gca(*round).candidates.update(i, candidate.clone());
                Outcome::Done
            }
            Action::ScanB { round } => {
                let view = self.gca(*round).candidates.scan();
                Outcome::ViewB(self.isolate(i, view))
            }
        }
    }
}
