//! Generalized commit-adopt over the trace semilattice.
//!
//! A one-shot object: each participant proposes a trace and gets back a trace
//! together with a flag telling whether it *commits* or merely *adopts* it.
//! The implementation uses two snapshot objects, `A` for inputs and `B` for
//! candidate outputs, and costs every proposer exactly four shared-memory
//! steps:
//!
//! 1. write the input to `A[i]`, then scan `A`;
//! 2. replace every entry of the view by the GLB of itself and all entries it
//!    is incompatible with, giving a compatible projection;
//! 3. write the projection's LUB to `B[i]`, flagged with whether the view was
//!    already compatible, then scan `B`;
//! 4. output the GLB of the flagged candidates (or the own candidate when none
//!    is flagged), and commit when either every non-⊥ value seen equals the
//!    input, or no candidate is unflagged and every input below the output is
//!    backed by a candidate.
//!
//! `None` plays the role of ⊥ throughout. The bound operators ignore ⊥ except
//! that a GLB over a set containing ⊥ is ⊥; ⊥ is not below any trace.

use serde::Serialize;
use thiserror::Error;

use crate::objects::{Command, ProcessId};
use crate::sim::memory::{Action, Outcome, SnapshotObject};
use crate::trace::{self, ConflictRelation, Trace};

pub type CmdTrace = Trace<Command>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GcaError {
    #[error("process {process} already proposed to GCA round {round}")]
    DoubleProposal { round: u64, process: ProcessId },
}

/// Candidate written to `B`: a trace and its compatibility flag.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Candidate {
    pub trace: CmdTrace,
    pub compatible: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GcaResult {
    pub trace: CmdTrace,
    pub committed: bool,
}

/// The shared state of one GCA object.
#[derive(Debug, Clone)]
pub struct GcaInstance {
    pub round: u64,
    pub inputs: SnapshotObject<CmdTrace>,
    pub candidates: SnapshotObject<Candidate>,
}

impl GcaInstance {
    pub fn new(round: u64, n: usize) -> Self {
        GcaInstance {
            round,
            inputs: SnapshotObject::new(n),
            candidates: SnapshotObject::new(n),
        }
    }

    pub fn write_input(&mut self, i: ProcessId, input: CmdTrace) -> Result<(), GcaError> {
        if self.inputs.cell(i).is_some() {
            return Err(GcaError::DoubleProposal {
                round: self.round,
                process: i,
            });
        }
        self.inputs.update(i, input);
        Ok(())
    }
}

/// Outcome of the projection step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Projection {
    pub cells: Vec<Option<CmdTrace>>,
    pub all_compatible: bool,
    pub lub: CmdTrace,
}

fn pair_compatible(a: &CmdTrace, b: &CmdTrace) -> bool {
    trace::compatible(&[a.clone(), b.clone()])
}

/// Replaces each non-⊥ entry by the GLB of itself and every entry it is
/// incompatible with. ⊥ entries stay ⊥ and never count as incompatible.
pub fn compat_projection(view: &[Option<CmdTrace>], conflicts: &ConflictRelation) -> Projection {
    let cells: Vec<Option<CmdTrace>> = view
        .iter()
        .map(|cell| {
            let a = cell.as_ref()?;
            let mut group = vec![a.clone()];
            group.extend(
                view.iter()
                    .flatten()
                    .filter(|other| !pair_compatible(other, a))
                    .cloned(),
            );
            Some(trace::glb(&group).expect("nonempty group over one relation"))
        })
        .collect();
    let all_compatible = cells == view;
    let present: Vec<CmdTrace> = cells.iter().flatten().cloned().collect();
    let lub = if present.is_empty() {
        Trace::empty(conflicts)
    } else {
        trace::lub(&present).expect("projected entries are pairwise reconciled and compatible")
    };
    Projection {
        cells,
        all_compatible,
        lub,
    }
}

/// Output trace and commit flag of process `me` from its two views.
pub fn decide(
    me: ProcessId,
    input: &CmdTrace,
    view_a: &[Option<CmdTrace>],
    view_b: &[Option<Candidate>],
) -> GcaResult {
    let flagged: Vec<CmdTrace> = view_b
        .iter()
        .flatten()
        .filter(|c| c.compatible)
        .map(|c| c.trace.clone())
        .collect();
    let output = if flagged.is_empty() {
        view_b[me - 1]
            .as_ref()
            .expect("a scan of B includes the scanner's own candidate")
            .trace
            .clone()
    } else {
        trace::glb(&flagged).expect("flagged set is nonempty")
    };
    let unanimous = view_a.iter().flatten().all(|a| a == input)
        && view_b.iter().flatten().all(|b| &b.trace == input);
    let backed = view_a.iter().zip(view_b).all(|(a, b)| match a {
        Some(a) if a.is_prefix_of(&output) => b.is_some(),
        _ => true,
    });
    let no_unflagged = view_b.iter().flatten().all(|c| c.compatible);
    GcaResult {
        trace: output,
        committed: unanimous || (backed && no_unflagged),
    }
}

#[derive(Debug, Clone)]
enum Phase {
    WriteInput,
    ScanInputs,
    WriteCandidate {
        view_a: Vec<Option<CmdTrace>>,
        candidate: Candidate,
    },
    ScanCandidates {
        view_a: Vec<Option<CmdTrace>>,
    },
    Done,
}

/// Step machine for one `propose` call.
#[derive(Debug, Clone)]
pub struct GcaProposer {
    round: u64,
    process: ProcessId,
    input: CmdTrace,
    phase: Phase,
}

impl GcaProposer {
    pub fn new(round: u64, process: ProcessId, input: CmdTrace) -> Self {
        GcaProposer {
            round,
            process,
            input,
            phase: Phase::WriteInput,
        }
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn input(&self) -> &CmdTrace {
        &self.input
    }

    pub fn action(&self) -> Action {
        let round = self.round;
        match &self.phase {
            Phase::WriteInput => Action::UpdateA {
                round,
                input: self.input.clone(),
            },
            Phase::ScanInputs => Action::ScanA { round },
            Phase::WriteCandidate { candidate, .. } => Action::UpdateB {
                round,
                candidate: candidate.clone(),
            },
            Phase::ScanCandidates { .. } => Action::ScanB { round },
            Phase::Done => panic!("GCA proposer resumed after returning"),
        }
    }

    /// Feeds the outcome of [`GcaProposer::action`]; returns the result once
    /// the fourth step completes.
    pub fn resume(&mut self, outcome: Outcome) -> Option<GcaResult> {
        let phase = std::mem::replace(&mut self.phase, Phase::Done);
        let (next, result) = match (phase, outcome) {
            (Phase::WriteInput, Outcome::Done) => (Phase::ScanInputs, None),
            (Phase::ScanInputs, Outcome::ViewA(view_a)) => {
                let projection = compat_projection(&view_a, self.input.conflicts());
                let candidate = Candidate {
                    trace: projection.lub,
                    compatible: projection.all_compatible,
                };
                (Phase::WriteCandidate { view_a, candidate }, None)
            }
            (Phase::WriteCandidate { view_a, .. }, Outcome::Done) => {
                (Phase::ScanCandidates { view_a }, None)
            }
            (Phase::ScanCandidates { view_a }, Outcome::ViewB(view_b)) => {
                let result = decide(self.process, &self.input, &view_a, &view_b);
                (Phase::Done, Some(result))
            }
            (phase, outcome) => panic!("GCA proposer in {phase:?} got unexpected {outcome:?}"),
        };
        self.phase = next;
        result
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objects::{counter_spec, DEC, INC, READ};

    fn rel() -> ConflictRelation {
        counter_spec().conflicts().clone()
    }

    fn t(cmds: &[Command]) -> CmdTrace {
        Trace::from_schedule(cmds, &rel())
    }

    #[test]
    fn projection_of_compatible_view_is_identity() {
        let inc = Command::new(INC, 1, 1);
        let dec = Command::new(DEC, 2, 1);
        let view = vec![Some(t(&[inc])), Some(t(&[dec]))];
        let p = compat_projection(&view, &rel());
        assert_eq!(p.cells, view);
        assert!(p.all_compatible);
        assert_eq!(p.lub, t(&[inc, dec]));
    }

    #[test]
    fn projection_of_conflicting_view_is_empty() {
        let read = Command::new(READ, 1, 1);
        let inc = Command::new(INC, 2, 1);
        let view = vec![Some(t(&[read])), Some(t(&[inc]))];
        let p = compat_projection(&view, &rel());
        assert_eq!(p.cells, vec![Some(t(&[])), Some(t(&[]))]);
        assert!(!p.all_compatible);
        assert_eq!(p.lub, t(&[]));
    }

    #[test]
    fn projection_passes_bottom_through() {
        let inc = Command::new(INC, 1, 1);
        let view = vec![Some(t(&[inc])), None];
        let p = compat_projection(&view, &rel());
        assert_eq!(p.cells, view);
        assert!(p.all_compatible);
        assert_eq!(p.lub, t(&[inc]));
        let empty = compat_projection(&[None, None], &rel());
        assert!(empty.all_compatible);
        assert_eq!(empty.lub, t(&[]));
    }

    #[test]
    fn sole_participant_commits_its_input() {
        let read = Command::new(READ, 1, 1);
        let input = t(&[read]);
        let mut inst = GcaInstance::new(1, 3);
        let mut p = GcaProposer::new(1, 2, input.clone());
        let mut steps = 0;
        let result = loop {
            steps += 1;
            let outcome = match p.action() {
                Action::UpdateA { input, .. } => {
                    inst.write_input(2, input).unwrap();
                    Outcome::Done
                }
                Action::ScanA { .. } => Outcome::ViewA(inst.inputs.scan()),
                Action::UpdateB { candidate, .. } => {
                    inst.candidates.update(2, candidate);
                    Outcome::Done
                }
                Action::ScanB { .. } => Outcome::ViewB(inst.candidates.scan()),
                other => panic!("unexpected {other:?}"),
            };
            if let Some(r) = p.resume(outcome) {
                break r;
            }
        };
        assert_eq!(steps, 4);
        assert_eq!(
            result,
            GcaResult {
                trace: input,
                committed: true
            }
        );
    }

    #[test]
    fn double_proposal_is_rejected() {
        let mut inst = GcaInstance::new(7, 2);
        inst.write_input(1, t(&[])).unwrap();
        assert_eq!(
            inst.write_input(1, t(&[])),
            Err(GcaError::DoubleProposal {
                round: 7,
                process: 1
            })
        );
    }

    #[test]
    fn fully_interleaved_conflicting_singletons_both_adopt_empty() {
        // Both inputs written, both scans see both, both candidates written
        // unflagged before either scan of B.
        let read = t(&[Command::new(READ, 1, 1)]);
        let inc = t(&[Command::new(INC, 2, 1)]);
        let view_a = vec![Some(read.clone()), Some(inc.clone())];
        let p = compat_projection(&view_a, &rel());
        assert!(!p.all_compatible);
        let cand = Candidate {
            trace: p.lub.clone(),
            compatible: false,
        };
        let view_b = vec![Some(cand.clone()), Some(cand)];
        for (me, input) in [(1, &read), (2, &inc)] {
            let r = decide(me, input, &view_a, &view_b);
            assert_eq!(r.trace, t(&[]));
            assert!(!r.committed);
        }
    }

    #[test]
    fn unanimous_inputs_commit() {
        let s = t(&[Command::new(INC, 1, 1), Command::new(READ, 2, 1)]);
        let view_a = vec![Some(s.clone()), None, Some(s.clone())];
        let view_b = vec![
            Some(Candidate {
                trace: s.clone(),
                compatible: true,
            }),
            None,
            None,
        ];
        let r = decide(1, &s, &view_a, &view_b);
        assert_eq!(r.trace, s);
        assert!(r.committed);
    }

    #[test]
    fn unbacked_prefix_input_forces_adoption() {
        // Process 2's input is below the output but it has not written B yet.
        let inc = Command::new(INC, 1, 1);
        let dec = Command::new(DEC, 2, 1);
        let view_a = vec![Some(t(&[inc, dec])), Some(t(&[dec]))];
        let view_b = vec![
            Some(Candidate {
                trace: t(&[inc, dec]),
                compatible: true,
            }),
            None,
        ];
        let r = decide(1, &t(&[inc, dec]), &view_a, &view_b);
        assert_eq!(r.trace, t(&[inc, dec]));
        assert!(!r.committed);
    }
}
