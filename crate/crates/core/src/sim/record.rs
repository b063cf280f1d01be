use std::collections::BTreeMap;

use serde::Serialize;

use super::memory::{Action, Fault, Outcome};
use super::plan::SchedulePlan;
use crate::gca::{CmdTrace, GcaResult};
use crate::objects::{Command, ProcessId, Response};
use crate::trace::Op;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Step {
    pub index: u64,
    pub process: ProcessId,
    pub action: Action,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Invocation,
    Response,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HistoryEvent {
    pub kind: EventKind,
    pub process: ProcessId,
    pub seq: u64,
    pub op: Op,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<Response>,
    pub step_index: u64,
}

/// One invocation and what became of it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OperationRecord {
    pub process: ProcessId,
    pub seq: u64,
    pub op: Op,
    /// Workload phase the operation was drawn from (0 before the boundary).
    pub phase: u8,
    pub invoked_step: u64,
    pub responded_step: Option<u64>,
    pub response: Option<Response>,
    /// GCA rounds this invocation proposed to.
    pub rounds: u64,
}

impl OperationRecord {
    pub fn command(&self) -> Command {
        Command::new(self.op, self.process, self.seq)
    }

    pub fn is_complete(&self) -> bool {
        self.responded_step.is_some()
    }

    /// Whether the invocation is pending at step `t`.
    pub fn pending_at(&self, t: u64) -> bool {
        self.invoked_step <= t && self.responded_step.is_none_or(|r| r >= t)
    }
}

/// One `propose` call on one GCA instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GcaLedgerEntry {
    pub round: u64,
    pub process: ProcessId,
    pub input: CmdTrace,
    pub output: Option<GcaResult>,
    pub first_step: u64,
    pub last_step: u64,
    /// Shared-memory steps spent inside this call.
    pub steps: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CommittedWrite {
    pub step: u64,
    pub process: ProcessId,
    pub round: u64,
    pub trace: CmdTrace,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SkippedOp {
    pub process: ProcessId,
    pub op: Op,
}

/// How a solo window actually played out.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SoloSpan {
    pub window: usize,
    pub process: ProcessId,
    pub opened: u64,
    pub closed: u64,
    /// Steps the process took inside the window.
    pub solo_steps: u64,
    pub ops_completed: usize,
    pub reason: SoloClose,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SoloClose {
    Reached,
    Condition,
    Stuck,
    RunEnded,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExecutionRecord {
    pub n: usize,
    pub algorithm: String,
    pub object: String,
    pub plan: SchedulePlan,
    pub max_steps: u64,
    #[serde(skip)]
    pub steps: Vec<Step>,
    pub step_count: u64,
    pub local_steps: Vec<u64>,
    pub history: Vec<HistoryEvent>,
    pub operations: Vec<OperationRecord>,
    pub gca_ledger: Vec<GcaLedgerEntry>,
    pub committed_log: Vec<CommittedWrite>,
    /// Global step at which each crashed process stopped.
    pub crashed: BTreeMap<ProcessId, u64>,
    pub phase_switch_step: Option<u64>,
    pub solo_spans: Vec<SoloSpan>,
    pub skipped: Vec<SkippedOp>,
    /// The run hit `max_steps` (or the exploration depth) with work left.
    pub budget_exhausted: bool,
    /// Processes that could still move when the run stopped.
    pub unfinished: Vec<ProcessId>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fault: Option<Fault>,
}

impl ExecutionRecord {
    pub fn is_crashed(&self, p: ProcessId) -> bool {
        self.crashed.contains_key(&p)
    }

    pub fn operation(&self, process: ProcessId, seq: u64) -> Option<&OperationRecord> {
        self.operations
            .iter()
            .find(|o| o.process == process && o.seq == seq)
    }

    pub fn ledger_round(&self, round: u64) -> impl Iterator<Item = &GcaLedgerEntry> {
        self.gca_ledger.iter().filter(move |e| e.round == round)
    }
}
