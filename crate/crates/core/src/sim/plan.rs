use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::objects::ProcessId;

/// Identifies the generator behind [`Policy::Random`], so a report can be
/// replayed by another implementation.
pub const PRNG_ID: &str = "ChaCha8Rng (rand_chacha 0.3, SeedableRng::seed_from_u64)";

pub const DEFAULT_FAIRNESS_BOUND: u64 = 64;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "order")]
pub enum Policy {
    RoundRobin,
    Random,
    /// Process ids to schedule in order; entries naming a process that cannot
    /// move are skipped, and round-robin takes over once the script runs out.
    Scripted(Vec<ProcessId>),
}

/// When a solo window closes before its `end` step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "count")]
pub enum SoloUntil {
    /// Only at `end`, or when the process cannot move.
    #[default]
    End,
    /// After the process completes this many operations inside the window.
    Ops(usize),
    /// After the process commits at a GCA round in which it is, so far, the
    /// only proposer.
    FreshCommit,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SoloWindow {
    pub process: ProcessId,
    pub start: u64,
    pub end: u64,
    #[serde(default)]
    pub until: SoloUntil,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchedulePlan {
    pub seed: u64,
    pub policy: Policy,
    /// Process-local step count after which the process takes no more steps.
    #[serde(default)]
    pub crash_points: BTreeMap<ProcessId, u64>,
    #[serde(default)]
    pub solo_windows: Vec<SoloWindow>,
    /// Global step at which the workload switches to its second phase.
    #[serde(default)]
    pub phase_boundary: Option<u64>,
    #[serde(default = "default_fairness")]
    pub fairness_bound: u64,
}

fn default_fairness() -> u64 {
    DEFAULT_FAIRNESS_BOUND
}

impl SchedulePlan {
    pub fn new(seed: u64, policy: Policy) -> Self {
        SchedulePlan {
            seed,
            policy,
            crash_points: BTreeMap::new(),
            solo_windows: Vec::new(),
            phase_boundary: None,
            fairness_bound: DEFAULT_FAIRNESS_BOUND,
        }
    }

    pub fn round_robin() -> Self {
        Self::new(0, Policy::RoundRobin)
    }

    pub fn random(seed: u64) -> Self {
        Self::new(seed, Policy::Random)
    }

    pub fn with_crash(mut self, process: ProcessId, after_local_steps: u64) -> Self {
        self.crash_points.insert(process, after_local_steps);
        self
    }

    pub fn with_solo(mut self, window: SoloWindow) -> Self {
        self.solo_windows.push(window);
        self
    }

    pub fn with_phase_boundary(mut self, step: u64) -> Self {
        self.phase_boundary = Some(step);
        self
    }
}
