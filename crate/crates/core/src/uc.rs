//! The two universal constructions as per-process step machines.
//!
//! [`UcKind::Weak`] is the weakly conflict-free construction: a process reads
//! the latest committed trace from `S`, then proposes growing traces that
//! contain its command to successive GCA rounds until it commits one, and
//! finally records the commit in `S[i]`.
//!
//! [`UcKind::ConflictFree`] adds helping: the command is announced in `M[i]`
//! first, every round's proposal includes all announced commands missing from
//! the working trace, commits are published in `S[i]`, and the process returns
//! once the latest trace in `S` contains its command.

use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use crate::gca::{CmdTrace, GcaProposer, GcaResult};
use crate::objects::{Command, ProcessId, Response, SequentialSpec};
use crate::sim::memory::{Action, Outcome};
use crate::trace::{self, ConflictRelation, OccurrenceRef, Op, Trace};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum UcError {
    #[error("process {process} invoked an operation while another is pending")]
    ReentrantInvocation { process: ProcessId },
}

/// A `(round, trace)` pair stored in `S`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CommittedEntry {
    pub round: u64,
    pub trace: CmdTrace,
}

impl CommittedEntry {
    /// `(0, ε)`, the initial content of every `S` cell.
    pub fn initial(conflicts: &ConflictRelation) -> Self {
        CommittedEntry {
            round: 0,
            trace: Trace::empty(conflicts),
        }
    }
}

/// Entry with the largest round; ties go to the lowest index.
pub fn read_max_committed(entries: &[CommittedEntry]) -> Option<&CommittedEntry> {
    entries
        .iter()
        .reduce(|best, e| if e.round > best.round { e } else { best })
}

/// Arranges a set of commands in ascending `(process, seq)` order.
pub fn trace_of_set<'a>(
    commands: impl IntoIterator<Item = &'a Command>,
    conflicts: &ConflictRelation,
) -> CmdTrace {
    let ordered: BTreeSet<Command> = commands.into_iter().copied().collect();
    let schedule: Vec<Command> = ordered.into_iter().collect();
    trace::normalize(&schedule, conflicts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum UcKind {
    Weak,
    ConflictFree,
}

/// Local variables of one process.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UcProcessState {
    pub r: u64,
    pub seq: u64,
    pub s: CmdTrace,
    pub c: bool,
    pub pending: Option<Command>,
}

/// Something observable that happened during a step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MachineEvent {
    GcaReturned {
        round: u64,
        input: CmdTrace,
        result: GcaResult,
    },
    Committed(CommittedEntry),
    Completed {
        command: Command,
        response: Response,
        trace: CmdTrace,
    },
}

#[derive(Debug, Clone)]
enum Phase {
    Idle,
    Announce,
    ReadS {
        next: ProcessId,
        best: Option<CommittedEntry>,
        purpose: ReadPurpose,
    },
    ReadM {
        next: ProcessId,
        found: Vec<Command>,
    },
    Propose(GcaProposer),
    WriteS,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ReadPurpose {
    Start,
    Check,
}

#[derive(Debug, Clone)]
pub struct UcMachine {
    kind: UcKind,
    process: ProcessId,
    n: usize,
    state: UcProcessState,
    u: CmdTrace,
    phase: Phase,
}

impl UcMachine {
    pub fn new(kind: UcKind, process: ProcessId, n: usize, conflicts: &ConflictRelation) -> Self {
        UcMachine {
            kind,
            process,
            n,
            state: UcProcessState {
                r: 0,
                seq: 0,
                s: Trace::empty(conflicts),
                c: false,
                pending: None,
            },
            u: Trace::empty(conflicts),
            phase: Phase::Idle,
        }
    }

    pub fn kind(&self) -> UcKind {
        self.kind
    }

    pub fn process(&self) -> ProcessId {
        self.process
    }

    pub fn state(&self) -> &UcProcessState {
        &self.state
    }

    pub fn is_idle(&self) -> bool {
        matches!(self.phase, Phase::Idle)
    }

    /// Starts an invocation of `op`; local computation only.
    pub fn invoke(&mut self, op: Op) -> Result<Command, UcError> {
        if !self.is_idle() {
            return Err(UcError::ReentrantInvocation {
                process: self.process,
            });
        }
        self.state.c = false;
        self.state.seq += 1;
        let cmd = Command::new(op, self.process, self.state.seq);
        self.state.pending = Some(cmd);
        self.phase = match self.kind {
            UcKind::Weak => Self::start_read(ReadPurpose::Start),
            UcKind::ConflictFree => Phase::Announce,
        };
        Ok(cmd)
    }

    fn start_read(purpose: ReadPurpose) -> Phase {
        Phase::ReadS {
            next: 1,
            best: None,
            purpose,
        }
    }

    /// The shared-memory action of the next step, or `None` when idle.
    pub fn action(&self) -> Option<Action> {
        Some(match &self.phase {
            Phase::Idle => return None,
            Phase::Announce => Action::WriteM {
                command: self.cmd(),
            },
            Phase::ReadS { next, .. } => Action::ReadS { cell: *next },
            Phase::ReadM { next, .. } => Action::ReadM { cell: *next },
            Phase::Propose(p) => p.action(),
            Phase::WriteS => Action::WriteS {
                entry: CommittedEntry {
                    round: self.state.r,
                    trace: self.state.s.clone(),
                },
            },
        })
    }

    fn cmd(&self) -> Command {
        self.state.pending.expect("an invocation is in progress")
    }

    /// Applies the outcome of [`UcMachine::action`] and runs local
    /// computation up to the next shared-memory action.
    pub fn resume(&mut self, outcome: Outcome, spec: &SequentialSpec) -> Vec<MachineEvent> {
        let mut events = Vec::new();
        let phase = std::mem::replace(&mut self.phase, Phase::Idle);
        self.phase = match (phase, outcome) {
            (Phase::Announce, Outcome::Done) => Self::start_read(ReadPurpose::Start),
            (
                Phase::ReadS {
                    next,
                    best,
                    purpose,
                },
                Outcome::Entry(entry),
            ) => {
                let best = match best {
                    Some(b) if b.round >= entry.round => b,
                    _ => entry,
                };
                if next < self.n {
                    Phase::ReadS {
                        next: next + 1,
                        best: Some(best),
                        purpose,
                    }
                } else {
                    match purpose {
                        ReadPurpose::Start => {
                            // A process that returned without committing may
                            // already be past every round recorded in S; it
                            // keeps its own position so it never proposes to
                            // the same instance twice.
                            if best.round >= self.state.r {
                                self.state.r = best.round;
                                self.state.s = best.trace;
                            }
                            self.u = Trace::empty(self.state.s.conflicts());
                        }
                        ReadPurpose::Check => self.u = best.trace,
                    }
                    self.loop_head(spec, &mut events)
                }
            }
            (Phase::ReadM { next, mut found }, Outcome::Announcement(cell)) => {
                if let Some(cmd) = cell {
                    found.push(cmd);
                }
                if next < self.n {
                    Phase::ReadM {
                        next: next + 1,
                        found,
                    }
                } else {
                    let missing: Vec<&Command> =
                        found.iter().filter(|c| !self.state.s.contains(c)).collect();
                    let extension = trace_of_set(missing, self.state.s.conflicts());
                    self.state.s = self
                        .state
                        .s
                        .concat(&extension)
                        .expect("one conflict relation per execution");
                    Phase::Propose(GcaProposer::new(
                        self.state.r,
                        self.process,
                        self.state.s.clone(),
                    ))
                }
            }
            (Phase::Propose(mut p), outcome) => match p.resume(outcome) {
                None => Phase::Propose(p),
                Some(result) => {
                    events.push(MachineEvent::GcaReturned {
                        round: p.round(),
                        input: p.input().clone(),
                        result: result.clone(),
                    });
                    self.state.s = result.trace;
                    self.state.c = result.committed;
                    match self.kind {
                        UcKind::Weak => self.loop_head(spec, &mut events),
                        UcKind::ConflictFree if self.state.c => Phase::WriteS,
                        UcKind::ConflictFree => Self::start_read(ReadPurpose::Check),
                    }
                }
            },
            (Phase::WriteS, Outcome::Done) => {
                events.push(MachineEvent::Committed(CommittedEntry {
                    round: self.state.r,
                    trace: self.state.s.clone(),
                }));
                match self.kind {
                    UcKind::Weak => {
                        let trace = self.state.s.clone();
                        self.complete(trace, spec, &mut events)
                    }
                    UcKind::ConflictFree => Self::start_read(ReadPurpose::Check),
                }
            }
            (phase, outcome) => panic!("UC machine in {phase:?} got unexpected {outcome:?}"),
        };
        events
    }

    fn loop_head(&mut self, spec: &SequentialSpec, events: &mut Vec<MachineEvent>) -> Phase {
        let cmd = self.cmd();
        match self.kind {
            UcKind::Weak => {
                if self.state.s.contains(&cmd) && self.state.c {
                    return Phase::WriteS;
                }
                self.state.r += 1;
                if !self.state.s.contains(&cmd) {
                    self.state.s = self.state.s.append(cmd);
                }
                Phase::Propose(GcaProposer::new(
                    self.state.r,
                    self.process,
                    self.state.s.clone(),
                ))
            }
            UcKind::ConflictFree => {
                if self.u.contains(&cmd) {
                    let trace = self.u.clone();
                    return self.complete(trace, spec, events);
                }
                self.state.r += 1;
                Phase::ReadM {
                    next: 1,
                    found: Vec::new(),
                }
            }
        }
    }

    fn complete(
        &mut self,
        trace: CmdTrace,
        spec: &SequentialSpec,
        events: &mut Vec<MachineEvent>,
    ) -> Phase {
        let command = self.cmd();
        let response = trace::ret_star(&OccurrenceRef::first(command), &trace, spec)
            .expect("a returned command is in its trace and defined in the spec");
        self.state.pending = None;
        events.push(MachineEvent::Completed {
            command,
            response,
            trace,
        });
        Phase::Idle
    }
}
