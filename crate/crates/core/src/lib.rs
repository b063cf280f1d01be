//! Conflict-free universal constructions over Mazurkiewicz traces, with a
//! deterministic shared-memory simulator and post-hoc checkers.

pub mod gca;
pub mod objects;
pub mod sim;
pub mod trace;
pub mod uc;
pub mod verify;

pub use gca::{Candidate, CmdTrace, GcaError, GcaResult};
pub use objects::{spec_by_name, Command, ProcessId, Response, SequentialSpec, State};
pub use sim::plan::{Policy, SchedulePlan, SoloUntil, SoloWindow};
pub use sim::record::ExecutionRecord;
pub use sim::{Algorithm, ProcessWorkload, Workload};
pub use trace::{ConflictRelation, Op, Trace, TraceError};
pub use uc::{CommittedEntry, UcKind};
