//! JSON reports. Everything outside `timing` is a function of the scenario
//! file and the seed.

use std::collections::BTreeMap;

use cfuc_core::sim::record::{CommittedWrite, ExecutionRecord, SkippedOp, SoloSpan, Step};
use cfuc_core::sim::ExplorationStats;
use cfuc_core::verify::{OracleBounds, Verdict};
use cfuc_core::ProcessId;
use serde::Serialize;
use serde_json::Value;

use crate::config::ScenarioConfig;

pub const SCHEMA: &str = "cfuc-report/1";

#[derive(Debug, Clone, Serialize)]
pub struct Timing {
    pub wall_clock_ms: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Budgets {
    pub max_steps: u64,
    pub progress_budget: u64,
    pub progress_budget_source: String,
    pub linearizability_bound: usize,
}

/// One invocation; `response_step` is a step number or `"pending"`.
#[derive(Debug, Clone, Serialize)]
pub struct OperationEntry {
    pub process: ProcessId,
    pub seq: u64,
    pub op: String,
    pub phase: u8,
    pub invoked_step: u64,
    pub response_step: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub response: Option<String>,
    pub rounds: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct StepSummary {
    pub total: u64,
    pub per_process: Vec<u64>,
    pub budget_exhausted: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phase_switch_step: Option<u64>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct GcaSummary {
    pub instances: usize,
    pub proposals: usize,
    pub commits: usize,
    pub adoptions: usize,
    pub pending: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub schema: &'static str,
    pub command: &'static str,
    pub scenario: String,
    pub config: ScenarioConfig,
    pub seed: u64,
    pub prng: &'static str,
    pub algorithm: String,
    pub object: String,
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fault: Option<String>,
    pub budgets: Budgets,
    pub steps: StepSummary,
    pub operations: Vec<OperationEntry>,
    pub committed_log: Vec<CommittedWrite>,
    pub gca: GcaSummary,
    pub crashed: BTreeMap<ProcessId, u64>,
    pub skipped: Vec<SkippedOp>,
    pub solo_spans: Vec<SoloSpan>,
    /// Live processes that completed every operation they invoked and had
    /// nothing left to do.
    pub completed_all: Vec<ProcessId>,
    pub verdicts: Vec<Verdict>,
    pub all_hold: bool,
    pub timing: Timing,
}

pub fn operations(record: &ExecutionRecord) -> Vec<OperationEntry> {
    record
        .operations
        .iter()
        .map(|o| OperationEntry {
            process: o.process,
            seq: o.seq,
            op: o.op.to_string(),
            phase: o.phase,
            invoked_step: o.invoked_step,
            response_step: o.responded_step.map_or(Value::from("pending"), Value::from),
            response: o.response.as_ref().map(ToString::to_string),
            rounds: o.rounds,
        })
        .collect()
}

pub fn step_summary(record: &ExecutionRecord) -> StepSummary {
    StepSummary {
        total: record.step_count,
        per_process: record.local_steps.clone(),
        budget_exhausted: record.budget_exhausted,
        phase_switch_step: record.phase_switch_step,
    }
}

pub fn gca_summary(record: &ExecutionRecord) -> GcaSummary {
    let mut s = GcaSummary {
        instances: record
            .gca_ledger
            .iter()
            .map(|e| e.round)
            .collect::<std::collections::BTreeSet<_>>()
            .len(),
        proposals: record.gca_ledger.len(),
        ..GcaSummary::default()
    };
    for e in &record.gca_ledger {
        match &e.output {
            Some(o) if o.committed => s.commits += 1,
            Some(_) => s.adoptions += 1,
            None => s.pending += 1,
        }
    }
    s
}

pub fn completed_all(record: &ExecutionRecord) -> Vec<ProcessId> {
    (1..=record.n)
        .filter(|&p| {
            !record.is_crashed(p)
                && !record.unfinished.contains(&p)
                && record.operations.iter().any(|o| o.process == p)
                && record
                    .operations
                    .iter()
                    .filter(|o| o.process == p)
                    .all(|o| o.is_complete())
        })
        .collect()
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct CheckTally {
    pub checked: u64,
    pub failed: u64,
}

/// The first execution that broke a check, in full.
#[derive(Debug, Clone, Serialize)]
pub struct Counterexample {
    /// Position of the execution in exploration order, from 0.
    pub execution: u64,
    pub failed: Vec<Verdict>,
    pub schedule: Vec<ProcessId>,
    pub operations: Vec<OperationEntry>,
    pub steps: Vec<Step>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExploreReport {
    pub schema: &'static str,
    pub command: &'static str,
    pub scenario: String,
    pub config: ScenarioConfig,
    pub seed: u64,
    pub algorithm: String,
    pub object: String,
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fault: Option<String>,
    pub depth: u64,
    /// Whether interleavings that only reorder commuting steps were skipped.
    pub reduction: bool,
    pub max_executions: u64,
    pub linearizability_bound: usize,
    pub stats: ExplorationStats,
    pub complete_executions: u64,
    pub checks: BTreeMap<String, CheckTally>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Counterexample>,
    pub all_hold: bool,
    pub timing: Timing,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleSummary {
    pub schema: &'static str,
    pub command: &'static str,
    pub bounds: OracleBounds,
    pub counts: BTreeMap<&'static str, u64>,
    pub total: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mismatch: Option<cfuc_core::verify::oracle_suite::Mismatch>,
    pub all_hold: bool,
    pub timing: Timing,
}

/// Pretty JSON with a trailing newline.
pub fn render<T: Serialize>(report: &T) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("reports serialize");
    s.push('\n');
    s
}
