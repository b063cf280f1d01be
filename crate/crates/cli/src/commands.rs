//! The three verbs, as library functions returning reports.

use std::collections::BTreeMap;
use std::time::Instant;

use cfuc_core::sim::plan::PRNG_ID;
use cfuc_core::sim::{
    exhaustive_interleavings, reduced_interleavings, ExplorationBudgetExceeded, Simulator,
};
use cfuc_core::verify::{
    check_progress, check_safety, oracle_suite, OracleBounds, Reference, Verdict,
};
use cfuc_core::{objects::counter_spec, ExecutionRecord};

use crate::config::Scenario;
use crate::report::{
    completed_all, gca_summary, operations, step_summary, Budgets, CheckTally, Counterexample,
    ExploreReport, OracleSummary, RunReport, Timing,
};

fn simulator(scenario: &Scenario, seed: u64) -> Simulator {
    let sim = Simulator::new(
        &scenario.spec,
        scenario.algorithm(),
        scenario.workload(seed),
        scenario.plan(seed),
        scenario.max_steps,
    )
    .expect("validated scenarios build a simulator");
    match scenario.fault {
        Some(f) => sim.with_fault(f),
        None => sim,
    }
}

/// Safety verdicts the scenario asked for.
fn safety_verdicts(scenario: &Scenario, record: &ExecutionRecord) -> Vec<Verdict> {
    check_safety(record, &scenario.spec, scenario.linearizability_bound)
        .into_iter()
        .filter(|v| {
            let family = if v.property.starts_with("gca.") {
                "gca"
            } else {
                v.property.as_str()
            };
            scenario.wants(family)
        })
        .collect()
}

fn elapsed(start: Instant) -> Timing {
    Timing {
        wall_clock_ms: start.elapsed().as_secs_f64() * 1e3,
    }
}

/// Runs one seeded execution and every requested check.
pub fn run_scenario(scenario: &Scenario, seed: u64) -> RunReport {
    let start = Instant::now();
    let record = simulator(scenario, seed).run();
    let mut verdicts = safety_verdicts(scenario, &record);
    let (budget, source) = scenario.progress_budget();
    if let Some(class) = scenario.progress {
        verdicts.push(
            match check_progress(&record, &scenario.spec, scenario.kind, class, budget) {
                Ok(v) => v,
                Err(mismatch) => {
                    Verdict::fail(format!("progress.{}", class.name()), mismatch.to_string())
                }
            },
        );
    }
    RunReport {
        schema: crate::report::SCHEMA,
        command: "run",
        scenario: scenario.name.clone(),
        config: scenario.config.clone(),
        seed,
        prng: PRNG_ID,
        algorithm: record.algorithm.clone(),
        object: record.object.clone(),
        n: record.n,
        fault: scenario.config.fault.as_ref().map(|f| f.get_ref().clone()),
        budgets: Budgets {
            max_steps: scenario.max_steps,
            progress_budget: budget,
            progress_budget_source: source,
            linearizability_bound: scenario.linearizability_bound,
        },
        steps: step_summary(&record),
        operations: operations(&record),
        committed_log: record.committed_log.clone(),
        gca: gca_summary(&record),
        crashed: record.crashed.clone(),
        skipped: record.skipped.clone(),
        solo_spans: record.solo_spans.clone(),
        completed_all: completed_all(&record),
        all_hold: verdicts.iter().all(|v| v.holds),
        verdicts,
        timing: elapsed(start),
    }
}

/// Runs the safety checks on every interleaving up to `depth` steps. The
/// seed only matters to generated workloads.
pub fn explore(
    scenario: &Scenario,
    depth: u64,
    seed: u64,
    reduction: bool,
) -> Result<ExploreReport, ExplorationBudgetExceeded> {
    let start = Instant::now();
    let sim = simulator(scenario, seed);
    let mut checks: BTreeMap<String, CheckTally> = BTreeMap::new();
    let mut counterexample = None;
    let mut index = 0u64;
    let visit = |record: &ExecutionRecord| {
        let verdicts = safety_verdicts(scenario, record);
        for v in &verdicts {
            let t = checks.entry(v.property.clone()).or_default();
            t.checked += 1;
            t.failed += u64::from(!v.holds);
        }
        if counterexample.is_none() && verdicts.iter().any(|v| !v.holds) {
            counterexample = Some(Counterexample {
                execution: index,
                failed: verdicts.into_iter().filter(|v| !v.holds).collect(),
                schedule: record.steps.iter().map(|s| s.process).collect(),
                operations: operations(record),
                steps: record.steps.clone(),
            });
        }
        index += 1;
    };
    let stats = if reduction {
        reduced_interleavings(sim, depth, scenario.max_executions, visit)
    } else {
        exhaustive_interleavings(sim, depth, scenario.max_executions, visit)
    }?;
    Ok(ExploreReport {
        schema: crate::report::SCHEMA,
        command: "explore",
        scenario: scenario.name.clone(),
        config: scenario.config.clone(),
        seed,
        algorithm: scenario.algorithm().name().to_string(),
        object: scenario.spec.name().to_string(),
        n: scenario.n,
        fault: scenario.config.fault.as_ref().map(|f| f.get_ref().clone()),
        depth,
        reduction,
        max_executions: scenario.max_executions,
        linearizability_bound: scenario.linearizability_bound,
        stats,
        complete_executions: stats.executions - stats.truncated,
        all_hold: counterexample.is_none(),
        checks,
        counterexample,
        timing: elapsed(start),
    })
}

/// Compares the counter's trace algebra with the brute-force oracle.
pub fn oracle(max_len: usize) -> OracleSummary {
    let start = Instant::now();
    let bounds = OracleBounds::for_max_len(max_len);
    let report = oracle_suite(&Reference, &counter_spec(), bounds);
    OracleSummary {
        schema: crate::report::SCHEMA,
        command: "oracle",
        bounds,
        total: report.total(),
        all_hold: report.passed(),
        counts: report.counts,
        mismatch: report.mismatch,
        timing: elapsed(start),
    }
}
