//! Deterministic simulation of asynchronous shared memory.
//!
//! Processes are step machines that each perform one shared-memory action per
//! step. A [`Simulator`] owns the memory and the machines and decides, one step
//! at a time, who moves next: solo windows first, then the plan's policy. The
//! same inputs always produce the same [`ExecutionRecord`].

pub mod gen;
pub mod memory;
pub mod plan;
pub mod record;

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::gca::{CmdTrace, GcaProposer};
use crate::objects::{Command, ProcessId, SequentialSpec};
use crate::trace::Op;
use crate::uc::{MachineEvent, UcKind, UcMachine};
use memory::SharedMemory;
use plan::{Policy, SchedulePlan, SoloUntil};
use record::{
    CommittedWrite, EventKind, ExecutionRecord, GcaLedgerEntry, HistoryEvent, OperationRecord,
    SkippedOp, SoloClose, SoloSpan, Step,
};

pub const DEFAULT_MAX_STEPS: u64 = 20_000;

/// Leaf budget of [`exhaustive_interleavings`] unless the caller picks one.
pub const DEFAULT_MAX_LEAVES: u64 = 5_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("max_steps must be positive")]
    ZeroSteps,
    #[error("at least one process is required")]
    NoProcesses,
    #[error("workload lists {got} processes but the algorithm runs {expected}")]
    WorkloadSize { expected: usize, got: usize },
    #[error("process {process} in the schedule plan is outside 1..={n}")]
    UnknownProcess { process: ProcessId, n: usize },
    #[error("solo window {index} ends before it starts")]
    EmptyWindow { index: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("exploration exceeded its budget of {budget} executions")]
pub struct ExplorationBudgetExceeded {
    pub budget: u64,
}

/// What the processes run.
#[derive(Debug, Clone)]
pub enum Algorithm {
    Uc(UcKind),
    /// A single GCA instance (round 1). `None` entries do not propose.
    Gca {
        inputs: Vec<Option<CmdTrace>>,
    },
}

impl Algorithm {
    pub const NAMES: &'static [&'static str] = &["weak-uc", "cf-uc"];

    pub fn by_name(name: &str) -> Option<Algorithm> {
        match name {
            "weak-uc" => Some(Algorithm::Uc(UcKind::Weak)),
            "cf-uc" => Some(Algorithm::Uc(UcKind::ConflictFree)),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Uc(UcKind::Weak) => "weak-uc",
            Algorithm::Uc(UcKind::ConflictFree) => "cf-uc",
            Algorithm::Gca { .. } => "gca",
        }
    }

    /// Shared-memory steps of one uncontended round for `n` processes.
    pub fn steps_per_round(&self, n: usize) -> u64 {
        match self {
            Algorithm::Uc(UcKind::Weak) | Algorithm::Gca { .. } => 4,
            // Read M, propose, write S, read S.
            Algorithm::Uc(UcKind::ConflictFree) => 2 * n as u64 + 5,
        }
    }
}

/// Operations of one process: `before` is drawn from until the phase
/// boundary, `after` from then on.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ProcessWorkload {
    pub before: Vec<Op>,
    pub after: Vec<Op>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Workload {
    pub processes: Vec<ProcessWorkload>,
}

impl Workload {
    /// Every process runs its list in a single phase.
    pub fn single_phase(lists: Vec<Vec<Op>>) -> Self {
        Workload {
            processes: lists
                .into_iter()
                .map(|before| ProcessWorkload {
                    before,
                    after: Vec::new(),
                })
                .collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.processes.len()
    }

    pub fn total_ops(&self) -> usize {
        self.processes
            .iter()
            .map(|p| p.before.len() + p.after.len())
            .sum()
    }
}

#[derive(Debug, Clone)]
enum Machine {
    Uc(UcMachine),
    Gca {
        input: Option<CmdTrace>,
        proposer: Option<GcaProposer>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum WindowState {
    Waiting,
    Open {
        opened: u64,
        steps: u64,
        ops: usize,
        fresh_commit: bool,
    },
    Closed,
}

#[derive(Debug, Clone)]
pub struct Simulator {
    spec: SequentialSpec,
    algorithm: Algorithm,
    workload: Workload,
    mem: SharedMemory,
    machines: Vec<Machine>,
    cursors: Vec<usize>,
    phase: u8,
    rng: ChaCha8Rng,
    starved: Vec<u64>,
    last: Option<ProcessId>,
    script_pos: usize,
    windows: Vec<WindowState>,
    current_op: Vec<Option<usize>>,
    open_calls: BTreeMap<(u64, ProcessId), usize>,
    record: ExecutionRecord,
}

impl Simulator {
    pub fn new(
        spec: &SequentialSpec,
        algorithm: Algorithm,
        workload: Workload,
        plan: SchedulePlan,
        max_steps: u64,
    ) -> Result<Self, SimError> {
        if max_steps == 0 {
            return Err(SimError::ZeroSteps);
        }
        let n = match &algorithm {
            Algorithm::Uc(_) => workload.n(),
            Algorithm::Gca { inputs } => inputs.len(),
        };
        if n == 0 {
            return Err(SimError::NoProcesses);
        }
        if matches!(algorithm, Algorithm::Gca { .. }) && workload.n() != 0 && workload.n() != n {
            return Err(SimError::WorkloadSize {
                expected: n,
                got: workload.n(),
            });
        }
        let named = plan
            .crash_points
            .keys()
            .copied()
            .chain(plan.solo_windows.iter().map(|w| w.process))
            .chain(match &plan.policy {
                Policy::Scripted(order) => order.clone(),
                _ => Vec::new(),
            });
        for process in named {
            if process == 0 || process > n {
                return Err(SimError::UnknownProcess { process, n });
            }
        }
        if let Some(index) = plan.solo_windows.iter().position(|w| w.end < w.start) {
            return Err(SimError::EmptyWindow { index });
        }
        let conflicts = spec.conflicts();
        let machines = (1..=n)
            .map(|p| match &algorithm {
                Algorithm::Uc(kind) => Machine::Uc(UcMachine::new(*kind, p, n, conflicts)),
                Algorithm::Gca { inputs } => Machine::Gca {
                    input: inputs[p - 1].clone(),
                    proposer: None,
                },
            })
            .collect();
        let crashed = plan
            .crash_points
            .iter()
            .filter(|(_, &k)| k == 0)
            .map(|(&p, _)| (p, 0))
            .collect();
        let record = ExecutionRecord {
            n,
            algorithm: algorithm.name().to_string(),
            object: spec.name().to_string(),
            plan: plan.clone(),
            max_steps,
            steps: Vec::new(),
            step_count: 0,
            local_steps: vec![0; n],
            history: Vec::new(),
            operations: Vec::new(),
            gca_ledger: Vec::new(),
            committed_log: Vec::new(),
            crashed,
            phase_switch_step: None,
            solo_spans: Vec::new(),
            skipped: Vec::new(),
            budget_exhausted: false,
            unfinished: Vec::new(),
            fault: None,
        };
        Ok(Simulator {
            spec: spec.clone(),
            algorithm,
            mem: SharedMemory::new(n, conflicts),
            machines,
            cursors: vec![0; n],
            phase: 0,
            rng: ChaCha8Rng::seed_from_u64(plan.seed),
            starved: vec![0; n],
            last: None,
            script_pos: 0,
            windows: vec![WindowState::Waiting; plan.solo_windows.len()],
            current_op: vec![None; n],
            open_calls: BTreeMap::new(),
            workload,
            record,
        })
    }

    pub fn n(&self) -> usize {
        self.record.n
    }

    /// Makes the shared memory misbehave as described by `fault`.
    pub fn with_fault(mut self, fault: memory::Fault) -> Self {
        self.mem.inject(fault);
        self.record.fault = Some(fault);
        self
    }

    pub fn algorithm(&self) -> &Algorithm {
        &self.algorithm
    }

    pub fn step_count(&self) -> u64 {
        self.record.step_count
    }

    pub fn record(&self) -> &ExecutionRecord {
        &self.record
    }

    pub fn memory(&self) -> &SharedMemory {
        &self.mem
    }

    fn phase_list(&self, p: ProcessId) -> &[Op] {
        match self.workload.processes.get(p - 1) {
            Some(w) if self.phase == 0 => &w.before,
            Some(w) => &w.after,
            None => &[],
        }
    }

    /// Whether `p` can take a step now.
    pub fn is_runnable(&self, p: ProcessId) -> bool {
        if self.record.is_crashed(p) {
            return false;
        }
        match &self.machines[p - 1] {
            Machine::Uc(m) => !m.is_idle() || self.cursors[p - 1] < self.phase_list(p).len(),
            Machine::Gca { input, proposer } => match proposer {
                Some(prop) => !self.ledger_done(prop.round(), p),
                None => input.is_some() && !self.open_calls.contains_key(&(1, p)),
            },
        }
    }

    fn ledger_done(&self, round: u64, p: ProcessId) -> bool {
        self.open_calls
            .get(&(round, p))
            .is_some_and(|&k| self.record.gca_ledger[k].output.is_some())
    }

    pub fn runnable(&self) -> Vec<ProcessId> {
        (1..=self.n()).filter(|&p| self.is_runnable(p)).collect()
    }

    /// Moves to the second workload phase once the boundary is reached, or
    /// as soon as nobody can move in the first one. Unstarted first-phase
    /// operations are dropped.
    fn maybe_switch_phase(&mut self) {
        if self.phase != 0 {
            return;
        }
        let reached = self
            .record
            .plan
            .phase_boundary
            .is_some_and(|tau| self.record.step_count >= tau);
        if !reached && !self.runnable().is_empty() {
            return;
        }
        let has_second = self.workload.processes.iter().any(|w| !w.after.is_empty());
        if !reached && !has_second {
            return;
        }
        for (k, w) in self.workload.processes.iter().enumerate() {
            for &op in &w.before[self.cursors[k].min(w.before.len())..] {
                self.record.skipped.push(SkippedOp { process: k + 1, op });
            }
        }
        self.cursors.iter_mut().for_each(|c| *c = 0);
        self.phase = 1;
        self.record.phase_switch_step = Some(self.record.step_count);
    }

    fn choose(&mut self) -> Option<ProcessId> {
        let now = self.record.step_count;
        for k in 0..self.windows.len() {
            let w = self.record.plan.solo_windows[k].clone();
            match self.windows[k] {
                WindowState::Closed => continue,
                _ if now >= w.end => self.close_window(k, SoloClose::Reached),
                _ if now < w.start => continue,
                _ if !self.is_runnable(w.process) => self.close_window(k, SoloClose::Stuck),
                WindowState::Waiting => {
                    self.windows[k] = WindowState::Open {
                        opened: now,
                        steps: 0,
                        ops: 0,
                        fresh_commit: false,
                    };
                    return Some(w.process);
                }
                WindowState::Open { .. } => return Some(w.process),
            }
        }
        let ready = self.runnable();
        if ready.is_empty() {
            return None;
        }
        let chosen = match &self.record.plan.policy {
            Policy::Random => {
                let bound = self.record.plan.fairness_bound.max(1);
                let starving = ready
                    .iter()
                    .copied()
                    .filter(|&p| self.starved[p - 1] >= bound)
                    .max_by_key(|&p| (self.starved[p - 1], std::cmp::Reverse(p)));
                match starving {
                    Some(p) => p,
                    None => ready[self.rng.gen_range(0..ready.len())],
                }
            }
            Policy::RoundRobin => self.round_robin(&ready),
            Policy::Scripted(order) => {
                let mut pick = None;
                while self.script_pos < order.len() {
                    let p = order[self.script_pos];
                    self.script_pos += 1;
                    if ready.contains(&p) {
                        pick = Some(p);
                        break;
                    }
                }
                pick.unwrap_or_else(|| self.round_robin(&ready))
            }
        };
        for &p in &ready {
            self.starved[p - 1] = if p == chosen {
                0
            } else {
                self.starved[p - 1] + 1
            };
        }
        Some(chosen)
    }

    fn round_robin(&self, ready: &[ProcessId]) -> ProcessId {
        let after = self.last.unwrap_or(0);
        ready
            .iter()
            .copied()
            .find(|&p| p > after)
            .unwrap_or(ready[0])
    }

    fn close_window(&mut self, k: usize, reason: SoloClose) {
        let now = self.record.step_count;
        let (opened, solo_steps, ops_completed) = match self.windows[k] {
            WindowState::Open {
                opened, steps, ops, ..
            } => (opened, steps, ops),
            WindowState::Waiting => (now, 0, 0),
            WindowState::Closed => return,
        };
        self.windows[k] = WindowState::Closed;
        self.record.solo_spans.push(SoloSpan {
            window: k,
            process: self.record.plan.solo_windows[k].process,
            opened,
            closed: now,
            solo_steps,
            ops_completed,
            reason,
        });
    }

    fn next_step(&self, p: ProcessId) -> NextStep {
        let (action, invokes) = match &self.machines[p - 1] {
            Machine::Uc(m) if m.is_idle() => {
                let mut m = m.clone();
                m.invoke(self.phase_list(p)[self.cursors[p - 1]])
                    .expect("idle machines accept invocations");
                (m.action().expect("a busy machine has an action"), true)
            }
            Machine::Uc(m) => (m.action().expect("a busy machine has an action"), false),
            Machine::Gca { input, proposer } => (
                match proposer {
                    Some(prop) => prop.action(),
                    None => {
                        GcaProposer::new(1, p, input.clone().expect("only proposers are runnable"))
                            .action()
                    }
                },
                false,
            ),
        };
        let may_respond = matches!(self.machines[p - 1], Machine::Uc(_)) && may_respond(&action);
        NextStep {
            process: p,
            action,
            invokes,
            may_respond,
        }
    }

    /// Performs one step of process `p`, invoking its next operation first if
    /// it is idle.
    pub fn step(&mut self, p: ProcessId) {
        debug_assert!(self.is_runnable(p), "process {p} cannot move");
        let index = self.record.step_count;
        let machine = &mut self.machines[p - 1];
        let action = match machine {
            Machine::Uc(m) => {
                if m.is_idle() {
                    let list = match self.workload.processes.get(p - 1) {
                        Some(w) if self.phase == 0 => &w.before,
                        Some(w) => &w.after,
                        None => unreachable!("runnable idle process has work"),
                    };
                    let op = list[self.cursors[p - 1]];
                    self.cursors[p - 1] += 1;
                    let cmd = m.invoke(op).expect("idle machines accept invocations");
                    self.current_op[p - 1] = Some(self.record.operations.len());
                    self.record.operations.push(OperationRecord {
                        process: p,
                        seq: cmd.seq,
                        op,
                        phase: self.phase,
                        invoked_step: index,
                        responded_step: None,
                        response: None,
                        rounds: 0,
                    });
                    self.record.history.push(HistoryEvent {
                        kind: EventKind::Invocation,
                        process: p,
                        seq: cmd.seq,
                        op,
                        value: None,
                        step_index: index,
                    });
                }
                m.action().expect("a busy machine has an action")
            }
            Machine::Gca { input, proposer } => proposer
                .get_or_insert_with(|| {
                    GcaProposer::new(1, p, input.clone().expect("only proposers are runnable"))
                })
                .action(),
        };
        let outcome = self.mem.perform(p, &action);
        if let Some(round) = action.gca_round() {
            let key = (round, p);
            let k = match self.open_calls.get(&key) {
                Some(&k) => k,
                None => {
                    let memory::Action::UpdateA { input, .. } = &action else {
                        unreachable!("a propose call starts by writing A")
                    };
                    self.record.gca_ledger.push(GcaLedgerEntry {
                        round,
                        process: p,
                        input: input.clone(),
                        output: None,
                        first_step: index,
                        last_step: index,
                        steps: 0,
                    });
                    self.open_calls
                        .insert(key, self.record.gca_ledger.len() - 1);
                    self.record.gca_ledger.len() - 1
                }
            };
            let entry = &mut self.record.gca_ledger[k];
            entry.steps += 1;
            entry.last_step = index;
        }
        let events = match &mut self.machines[p - 1] {
            Machine::Uc(m) => m.resume(outcome.clone(), &self.spec),
            Machine::Gca { proposer, .. } => {
                let prop = proposer.as_mut().expect("started above");
                match prop.resume(outcome.clone()) {
                    Some(result) => vec![MachineEvent::GcaReturned {
                        round: prop.round(),
                        input: prop.input().clone(),
                        result,
                    }],
                    None => Vec::new(),
                }
            }
        };
        self.record.steps.push(Step {
            index,
            process: p,
            action,
            outcome,
        });
        let mut completed = 0;
        let mut fresh_commit = false;
        for event in events {
            match event {
                MachineEvent::GcaReturned { round, result, .. } => {
                    let k = self.open_calls[&(round, p)];
                    if result.committed {
                        fresh_commit = self.record.ledger_round(round).all(|e| e.process == p);
                    }
                    self.record.gca_ledger[k].output = Some(result);
                    if let Some(op) = self.current_op[p - 1] {
                        self.record.operations[op].rounds += 1;
                    }
                }
                MachineEvent::Committed(entry) => self.record.committed_log.push(CommittedWrite {
                    step: index,
                    process: p,
                    round: entry.round,
                    trace: entry.trace,
                }),
                MachineEvent::Completed {
                    command, response, ..
                } => {
                    let op = self.current_op[p - 1]
                        .take()
                        .expect("completion of a recorded invocation");
                    let rec = &mut self.record.operations[op];
                    rec.responded_step = Some(index);
                    rec.response = Some(response.clone());
                    self.record.history.push(HistoryEvent {
                        kind: EventKind::Response,
                        process: p,
                        seq: command.seq,
                        op: command.op,
                        value: Some(response),
                        step_index: index,
                    });
                    debug_assert!(may_respond(
                        &self.record.steps.last().expect("pushed above").action
                    ));
                    completed += 1;
                }
            }
        }
        self.record.step_count += 1;
        self.record.local_steps[p - 1] += 1;
        self.last = Some(p);
        if self.record.plan.crash_points.get(&p) == Some(&self.record.local_steps[p - 1]) {
            self.record.crashed.insert(p, self.record.step_count);
        }
        for k in 0..self.windows.len() {
            if self.record.plan.solo_windows[k].process != p {
                continue;
            }
            if let WindowState::Open {
                steps,
                ops,
                fresh_commit: fresh,
                ..
            } = &mut self.windows[k]
            {
                *steps += 1;
                *ops += completed;
                *fresh |= fresh_commit;
                let done = match self.record.plan.solo_windows[k].until {
                    SoloUntil::End => false,
                    SoloUntil::Ops(target) => *ops >= target,
                    SoloUntil::FreshCommit => *fresh,
                };
                if done {
                    self.close_window(k, SoloClose::Condition);
                }
            }
        }
    }

    fn finish(&mut self) {
        for k in 0..self.windows.len() {
            if matches!(self.windows[k], WindowState::Open { .. }) {
                self.close_window(k, SoloClose::RunEnded);
            }
        }
        self.record.unfinished = self.runnable();
        self.record.budget_exhausted = !self.record.unfinished.is_empty();
    }

    /// Runs to quiescence or `max_steps`.
    pub fn run(mut self) -> ExecutionRecord {
        while self.record.step_count < self.record.max_steps {
            self.maybe_switch_phase();
            let Some(p) = self.choose() else { break };
            self.step(p);
        }
        self.maybe_switch_phase();
        self.finish();
        self.record
    }
}

/// Runs one execution; see [`Simulator`].
pub fn run(
    spec: &SequentialSpec,
    algorithm: Algorithm,
    workload: Workload,
    plan: SchedulePlan,
    max_steps: u64,
) -> Result<ExecutionRecord, SimError> {
    Ok(Simulator::new(spec, algorithm, workload, plan, max_steps)?.run())
}

/// Outcome of an exhaustive exploration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct ExplorationStats {
    pub executions: u64,
    /// Executions cut off at the depth bound with work left.
    pub truncated: u64,
}

/// Visits every interleaving of the processes' steps, each exactly once, up
/// to `depth` total steps. The policy and solo windows of the plan are
/// ignored; crash points and the phase boundary apply.
pub fn exhaustive_interleavings(
    sim: Simulator,
    depth: u64,
    max_executions: u64,
    visit: impl FnMut(&ExecutionRecord),
) -> Result<ExplorationStats, ExplorationBudgetExceeded> {
    explore(sim, depth, max_executions, false, visit)
}

/// Like [`exhaustive_interleavings`], but skips interleavings that differ
/// from an explored one only by the order of adjacent commuting steps (a
/// sleep-set search). Steps commute when they touch disjoint memory and do
/// not order a response before an invocation, so every execution that is
/// skipped has an explored twin with the same outcomes, the same history up
/// to step numbering, and the same real-time order of operations. With a
/// phase boundary, step order decides the phase and nothing is skipped.
pub fn reduced_interleavings(
    sim: Simulator,
    depth: u64,
    max_executions: u64,
    visit: impl FnMut(&ExecutionRecord),
) -> Result<ExplorationStats, ExplorationBudgetExceeded> {
    let reduce = sim.record.plan.phase_boundary.is_none();
    explore(sim, depth, max_executions, reduce, visit)
}

fn explore(
    sim: Simulator,
    depth: u64,
    max_executions: u64,
    reduce: bool,
    mut visit: impl FnMut(&ExecutionRecord),
) -> Result<ExplorationStats, ExplorationBudgetExceeded> {
    struct Search<'a> {
        depth: u64,
        budget: u64,
        reduce: bool,
        stats: ExplorationStats,
        visit: &'a mut dyn FnMut(&ExecutionRecord),
    }

    impl Search<'_> {
        fn go(
            &mut self,
            mut sim: Simulator,
            sleep: Vec<NextStep>,
        ) -> Result<(), ExplorationBudgetExceeded> {
            sim.maybe_switch_phase();
            let ready = sim.runnable();
            if ready.is_empty() || sim.step_count() >= self.depth {
                if self.stats.executions >= self.budget {
                    return Err(ExplorationBudgetExceeded {
                        budget: self.budget,
                    });
                }
                sim.finish();
                self.stats.executions += 1;
                self.stats.truncated += u64::from(sim.record.budget_exhausted);
                (self.visit)(&sim.record);
                return Ok(());
            }
            let todo: Vec<ProcessId> = ready
                .into_iter()
                .filter(|p| !sleep.iter().any(|s| s.process == *p))
                .collect();
            let mut sleep = sleep;
            for (k, &p) in todo.iter().enumerate() {
                let next = if self.reduce {
                    Some(sim.next_step(p))
                } else {
                    None
                };
                let child_sleep = match &next {
                    Some(t) => sleep
                        .iter()
                        .filter(|s| s.independent_of(t))
                        .cloned()
                        .collect(),
                    None => Vec::new(),
                };
                if k + 1 == todo.len() {
                    sim.step(p);
                    return self.go(sim, child_sleep);
                }
                let mut child = sim.clone();
                child.step(p);
                self.go(child, child_sleep)?;
                if let Some(t) = next {
                    sleep.push(t);
                }
            }
            // Every runnable process is asleep: this branch repeats one
            // already explored.
            Ok(())
        }
    }

    let mut search = Search {
        depth,
        budget: max_executions,
        reduce,
        stats: ExplorationStats::default(),
        visit: &mut visit,
    };
    search.go(sim, Vec::new())?;
    Ok(search.stats)
}

/// The next step of one process, as seen by the reduced search.
#[derive(Debug, Clone)]
struct NextStep {
    process: ProcessId,
    action: memory::Action,
    invokes: bool,
    may_respond: bool,
}

impl NextStep {
    fn independent_of(&self, other: &NextStep) -> bool {
        self.process != other.process
            && self
                .action
                .commutes_with(self.process, &other.action, other.process)
            && !(self.invokes && other.may_respond)
            && !(other.invokes && self.may_respond)
    }
}

/// Universal constructions respond only right after reading or writing `S`.
fn may_respond(action: &memory::Action) -> bool {
    matches!(
        action,
        memory::Action::ReadS { .. } | memory::Action::WriteS { .. }
    )
}

/// Command of the `seq`-th invocation of process `p` in a record.
pub fn command_of(record: &ExecutionRecord, p: ProcessId, seq: u64) -> Option<Command> {
    record.operation(p, seq).map(|o| o.command())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objects::{counter_spec, DEC, INC, READ};
    use plan::SoloWindow;
    use std::collections::BTreeSet;

    fn counter_run(lists: Vec<Vec<Op>>, plan: SchedulePlan) -> ExecutionRecord {
        run(
            &counter_spec(),
            Algorithm::Uc(UcKind::Weak),
            Workload::single_phase(lists),
            plan,
            DEFAULT_MAX_STEPS,
        )
        .unwrap()
    }

    #[test]
    fn solo_increment_has_one_invocation_and_one_response() {
        for plan in [SchedulePlan::round_robin(), SchedulePlan::random(9)] {
            let rec = counter_run(vec![vec![INC]], plan);
            assert_eq!(rec.history.len(), 2);
            assert_eq!(rec.history[0].kind, EventKind::Invocation);
            assert_eq!(rec.history[1].kind, EventKind::Response);
            assert!(!rec.budget_exhausted);
        }
    }

    #[test]
    fn crash_at_zero_takes_no_steps() {
        let rec = counter_run(
            vec![vec![INC], vec![DEC]],
            SchedulePlan::random(1).with_crash(1, 0),
        );
        assert!(rec.steps.iter().all(|s| s.process == 2));
        assert_eq!(rec.local_steps[0], 0);
        assert!(rec.operations.iter().all(|o| o.process == 2));
    }

    #[test]
    fn crash_mid_operation_leaves_it_pending() {
        let rec = counter_run(
            vec![vec![INC], vec![DEC]],
            SchedulePlan::random(1).with_crash(1, 3),
        );
        assert_eq!(rec.local_steps[0], 3);
        assert!(!rec.operation(1, 1).unwrap().is_complete());
        assert!(rec.operation(2, 1).unwrap().is_complete());
    }

    #[test]
    fn same_seed_same_record() {
        let lists = vec![vec![READ, INC], vec![INC, DEC], vec![DEC]];
        let a = counter_run(lists.clone(), SchedulePlan::random(42));
        let b = counter_run(lists, SchedulePlan::random(42));
        assert_eq!(a, b);
    }

    #[test]
    fn solo_window_excludes_others() {
        let plan = SchedulePlan::random(3).with_solo(SoloWindow {
            process: 2,
            start: 5,
            end: 1_000,
            until: SoloUntil::Ops(1),
        });
        let rec = counter_run(vec![vec![READ], vec![INC], vec![DEC]], plan);
        let span = &rec.solo_spans[0];
        assert_eq!(span.reason, SoloClose::Condition);
        assert!(rec.steps[span.opened as usize..span.closed as usize]
            .iter()
            .all(|s| s.process == 2));
    }

    #[test]
    fn phase_boundary_drops_unstarted_operations() {
        let workload = Workload {
            processes: vec![
                ProcessWorkload {
                    before: vec![INC; 50],
                    after: vec![DEC],
                },
                ProcessWorkload {
                    before: vec![],
                    after: vec![INC],
                },
            ],
        };
        let rec = run(
            &counter_spec(),
            Algorithm::Uc(UcKind::Weak),
            workload,
            SchedulePlan::round_robin().with_phase_boundary(10),
            DEFAULT_MAX_STEPS,
        )
        .unwrap();
        assert_eq!(rec.phase_switch_step, Some(10));
        assert!(!rec.skipped.is_empty());
        let after: Vec<_> = rec.operations.iter().filter(|o| o.phase == 1).collect();
        assert_eq!(after.len(), 2);
        assert!(after.iter().all(|o| o.invoked_step >= 10));
    }

    #[test]
    fn single_process_has_one_interleaving() {
        let sim = Simulator::new(
            &counter_spec(),
            Algorithm::Uc(UcKind::Weak),
            Workload::single_phase(vec![vec![INC, READ]]),
            SchedulePlan::round_robin(),
            DEFAULT_MAX_STEPS,
        )
        .unwrap();
        let stats = exhaustive_interleavings(sim, 100, 10, |_| {}).unwrap();
        assert_eq!(
            stats,
            ExplorationStats {
                executions: 1,
                truncated: 0
            }
        );
    }

    #[test]
    fn exploration_budget_is_enforced() {
        let sim = Simulator::new(
            &counter_spec(),
            Algorithm::Uc(UcKind::Weak),
            Workload::single_phase(vec![vec![INC], vec![DEC]]),
            SchedulePlan::round_robin(),
            DEFAULT_MAX_STEPS,
        )
        .unwrap();
        assert_eq!(
            exhaustive_interleavings(sim, 100, 5, |_| {}),
            Err(ExplorationBudgetExceeded { budget: 5 })
        );
    }

    /// Per-process step sequences plus the real-time order of operations:
    /// what an execution looks like to every checker.
    fn signature(rec: &ExecutionRecord) -> String {
        let mut out = String::new();
        for p in 1..=rec.n {
            for s in rec.steps.iter().filter(|s| s.process == p) {
                out += &format!("{p}:{:?}->{:?};", s.action, s.outcome);
            }
        }
        for a in &rec.operations {
            for b in &rec.operations {
                if a.responded_step.is_some_and(|r| r < b.invoked_step) {
                    out += &format!("{}<{};", a.command(), b.command());
                }
            }
        }
        out
    }

    fn signatures(
        kind: UcKind,
        lists: Vec<Vec<Op>>,
        depth: u64,
        reduce: bool,
    ) -> (BTreeSet<String>, u64) {
        let sim = Simulator::new(
            &counter_spec(),
            Algorithm::Uc(kind),
            Workload::single_phase(lists),
            SchedulePlan::round_robin(),
            DEFAULT_MAX_STEPS,
        )
        .unwrap();
        let mut seen = BTreeSet::new();
        let f = |rec: &ExecutionRecord| {
            seen.insert(signature(rec));
        };
        let stats = if reduce {
            reduced_interleavings(sim, depth, 10_000_000, f)
        } else {
            exhaustive_interleavings(sim, depth, 10_000_000, f)
        }
        .unwrap();
        (seen, stats.executions)
    }

    #[test]
    fn reduction_keeps_every_observable_execution() {
        for (kind, lists, depth) in [
            (UcKind::Weak, vec![vec![READ], vec![INC]], 14),
            (UcKind::Weak, vec![vec![INC, READ], vec![DEC]], 13),
            (UcKind::ConflictFree, vec![vec![INC], vec![DEC]], 14),
            (UcKind::ConflictFree, vec![vec![READ], vec![INC]], 14),
        ] {
            let (full, full_runs) = signatures(kind, lists.clone(), depth, false);
            let (reduced, reduced_runs) = signatures(kind, lists, depth, true);
            assert_eq!(full, reduced, "{kind:?}");
            assert!(
                reduced_runs < full_runs / 2,
                "{kind:?}: {reduced_runs} of {full_runs}"
            );
        }
    }
}
