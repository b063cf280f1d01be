//! End-to-end acceptance checks at full size. Prints one PASS/FAIL line per
//! criterion and exits nonzero if any of them fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use cfuc_cli::commands::{explore, oracle, run_scenario};
use cfuc_cli::config::{parse, Scenario};
use cfuc_cli::report::{render, RunReport};
use cfuc_cli::BUNDLED;
use cfuc_core::objects::{
    counter_spec, grow_set_spec, register_spec, spec_by_name, Command, Response, DEC, INC, READ,
};
use cfuc_core::sim::gen::{random_gca_inputs, random_workload};
use cfuc_core::sim::{
    exhaustive_interleavings, reduced_interleavings, run, Algorithm, Simulator, DEFAULT_MAX_STEPS,
};
use cfuc_core::trace::oracle::{all_schedules, swap_closure};
use cfuc_core::trace::{normalize, ret_star, ret_star_schedule, OccurrenceRef};
use cfuc_core::verify::gca::PROPOSE_STEPS;
use cfuc_core::verify::{check_gca_properties, check_round_monotonicity, check_safety};
use cfuc_core::{ExecutionRecord, Op, SchedulePlan, SequentialSpec, Trace, UcKind, Workload};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const KINDS: [UcKind; 2] = [UcKind::Weak, UcKind::ConflictFree];
const LIN_BOUND: usize = 10;

/// Outcome of one criterion: a summary of what was checked, or the first
/// thing that went wrong.
type Outcome = Result<String, String>;

/// Round-monotonicity over every universal-construction record produced by
/// the other criteria.
#[derive(Default)]
struct Monotonicity {
    records: u64,
    violation: Option<String>,
}

impl Monotonicity {
    fn record(&mut self, rec: &ExecutionRecord, context: impl FnOnce() -> String) {
        self.records += 1;
        let v = check_round_monotonicity(rec);
        if !v.holds && self.violation.is_none() {
            self.violation = Some(format!("{}: {:?}", context(), v.witness));
        }
    }

    fn report(&mut self, r: &RunReport) {
        self.records += 1;
        for v in r
            .verdicts
            .iter()
            .filter(|v| v.property == "round-monotonicity" && !v.holds)
        {
            self.violation
                .get_or_insert(format!("{} seed {}: {:?}", r.scenario, r.seed, v.witness));
        }
    }
}

fn first_failure(verdicts: &[cfuc_core::verify::Verdict]) -> Option<String> {
    verdicts
        .iter()
        .find(|v| !v.holds)
        .map(|v| format!("{}: {}", v.property, v.witness.as_deref().unwrap_or("")))
}

fn bundled(name: &str) -> &'static str {
    BUNDLED
        .iter()
        .find(|(n, _)| *n == name)
        .expect("bundled scenario")
        .1
}

fn scenario(text: &str, origin: &str) -> Scenario {
    parse(text, origin).unwrap_or_else(|e| panic!("{e}"))
}

/// Runs `seeds` seeds of a scenario, failing on the first broken verdict or
/// broken extra condition.
fn sweep(
    s: &Scenario,
    seeds: u64,
    mono: &mut Monotonicity,
    mut extra: impl FnMut(&RunReport) -> Result<(), String>,
) -> Result<(), String> {
    for seed in 0..seeds {
        let r = run_scenario(s, seed);
        mono.report(&r);
        if let Some(f) = first_failure(&r.verdicts) {
            return Err(format!("{} seed {seed}: {f}", s.name));
        }
        extra(&r).map_err(|e| format!("{} seed {seed}: {e}", s.name))?;
    }
    Ok(())
}

fn oracle_agreement() -> Outcome {
    let limit = Duration::from_secs(120);
    let summary = oracle(5);
    let took = Duration::from_secs_f64(summary.timing.wall_clock_ms / 1e3);
    if let Some(m) = summary.mismatch {
        return Err(format!(
            "{} on {}: expected {}, got {}",
            m.check, m.instance, m.expected, m.got
        ));
    }
    if took > limit {
        return Err(format!("took {took:.1?}, over the {limit:?} limit"));
    }
    Ok(format!(
        "{} instances, schedules up to length {}, pairs and triples up to total length {}, in {took:.1?}",
        summary.total, summary.bounds.max_len, summary.bounds.max_total
    ))
}

fn ret_star_invariance() -> Outcome {
    let spec = counter_spec();
    let c = spec.conflicts();
    let ops = spec.operations();
    let occurrences = |s: &[Op]| -> Vec<OccurrenceRef<Op>> {
        let mut seen = std::collections::BTreeMap::new();
        s.iter()
            .map(|&x| {
                let k = seen.entry(x).or_insert(0);
                *k += 1;
                OccurrenceRef::new(x, *k)
            })
            .collect()
    };
    let mut checks = 0u64;
    for s in all_schedules(ops, 5) {
        let t = normalize(&s, c);
        for occ in occurrences(&s) {
            let canonical = ret_star(&occ, &t, &spec).map_err(|e| e.to_string())?;
            for rep in swap_closure(&s, c) {
                checks += 1;
                let r = ret_star_schedule(&occ, &rep, &spec).map_err(|e| e.to_string())?;
                if r != canonical {
                    return Err(format!(
                        "{occ:?} in {rep:?}: {r:?} but {canonical:?} on the trace"
                    ));
                }
            }
        }
    }
    for s in all_schedules(ops, 4) {
        let t = normalize(&s, c);
        for u in all_schedules(ops, 2) {
            let ext = normalize(&[s.clone(), u].concat(), c);
            for occ in occurrences(&s) {
                checks += 1;
                let (short, long) = (ret_star(&occ, &t, &spec), ret_star(&occ, &ext, &spec));
                if short != long {
                    return Err(format!(
                        "{occ:?}: {short:?} in {t:?} but {long:?} in {ext:?}"
                    ));
                }
            }
        }
    }
    let example = ret_star(
        &OccurrenceRef::first(READ),
        &normalize(&[INC, DEC, READ], c),
        &spec,
    );
    if example != Ok(Response::Int(0)) {
        return Err(format!("read^(1) in [inc.dec.read] returned {example:?}"));
    }
    Ok(format!(
        "{checks} representative and extension checks; read^(1) in [inc.dec.read] returns 0"
    ))
}

fn gca_sim(
    spec: &SequentialSpec,
    inputs: Vec<Option<cfuc_core::CmdTrace>>,
    plan: SchedulePlan,
) -> Simulator {
    Simulator::new(
        spec,
        Algorithm::Gca { inputs },
        Workload::default(),
        plan,
        DEFAULT_MAX_STEPS,
    )
    .unwrap()
}

/// Counts of GCA executions and proposals, shared by the property and step
/// count criteria.
#[derive(Default)]
struct GcaSweep {
    exhaustive: u64,
    random: u64,
    property_failure: Option<String>,
    proposals: u64,
    step_failure: Option<String>,
}

impl GcaSweep {
    fn visit(&mut self, rec: &ExecutionRecord, context: &dyn Fn() -> String) {
        for (round, prop, v) in check_gca_properties(rec) {
            if !v.holds && self.property_failure.is_none() {
                self.property_failure = Some(format!(
                    "{}: round {round} {}: {:?}",
                    context(),
                    prop.name(),
                    v.witness
                ));
            }
        }
        for e in rec.gca_ledger.iter().filter(|e| e.output.is_some()) {
            self.proposals += 1;
            if e.steps != PROPOSE_STEPS && self.step_failure.is_none() {
                self.step_failure = Some(format!(
                    "{}: p{} took {} steps",
                    context(),
                    e.process,
                    e.steps
                ));
            }
        }
    }
}

fn gca_sweep() -> GcaSweep {
    let spec = counter_spec();
    let c = spec.conflicts();
    let mut sweep = GcaSweep::default();
    for &a in spec.operations() {
        for &b in spec.operations() {
            let inputs = vec![
                Some(Trace::singleton(Command::new(a, 1, 1), c)),
                Some(Trace::singleton(Command::new(b, 2, 1), c)),
            ];
            let sim = gca_sim(&spec, inputs, SchedulePlan::round_robin());
            let stats = exhaustive_interleavings(sim, 100, 10_000, |rec| {
                sweep.visit(rec, &|| format!("{a}/{b}"));
            })
            .expect("two proposers fit the budget");
            sweep.exhaustive += stats.executions;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x6CA);
    for seed in 0..10_000u64 {
        let n = rng.gen_range(2..=4);
        let inputs = random_gca_inputs(&mut rng, &spec, n, 0.1);
        let mut plan = SchedulePlan::random(seed);
        if rng.gen_bool(0.3) {
            plan = plan.with_crash(rng.gen_range(1..=n), rng.gen_range(0..PROPOSE_STEPS as u64));
        }
        let rec = gca_sim(&spec, inputs, plan).run();
        sweep.visit(&rec, &|| format!("random run {seed}, n = {n}"));
        sweep.random += 1;
    }
    sweep
}

fn gca_properties(s: &GcaSweep) -> Outcome {
    match &s.property_failure {
        Some(f) => Err(f.clone()),
        None => Ok(format!(
            "the six commit-adopt properties plus wait-freedom over {} exhaustive two-proposer executions (9 input pairs) and {} random runs, n in 2..=4",
            s.exhaustive, s.random
        )),
    }
}

fn gca_step_count(s: &GcaSweep) -> Outcome {
    match &s.step_failure {
        Some(f) => Err(f.clone()),
        None => Ok(format!(
            "{} completed proposals, each {PROPOSE_STEPS} steps",
            s.proposals
        )),
    }
}

fn linearizability(mono: &mut Monotonicity) -> Outcome {
    const DEPTH: u64 = 36;
    let spec = counter_spec();
    let (mut explored, mut complete) = (0u64, 0u64);
    for kind in KINDS {
        for &a in spec.operations() {
            for &b in spec.operations() {
                let sim = Simulator::new(
                    &spec,
                    Algorithm::Uc(kind),
                    Workload::single_phase(vec![vec![a], vec![b]]),
                    SchedulePlan::round_robin(),
                    DEFAULT_MAX_STEPS,
                )
                .unwrap();
                let mut failure = None;
                let stats = reduced_interleavings(sim, DEPTH, 5_000_000, |rec| {
                    mono.record(rec, || format!("{kind:?} {a}/{b}"));
                    if failure.is_none() {
                        failure = first_failure(&check_safety(rec, &spec, LIN_BOUND));
                    }
                })
                .map_err(|e| e.to_string())?;
                if let Some(f) = failure {
                    return Err(format!("{kind:?} {a}/{b}: {f}"));
                }
                explored += stats.executions;
                complete += stats.executions - stats.truncated;
            }
        }
    }
    let specs = [
        counter_spec(),
        grow_set_spec(),
        register_spec(),
        spec_by_name("total-conflict-queue").unwrap(),
        spec_by_name("counter-updates-only").unwrap(),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(0x11E);
    let random = 5_000u64;
    for seed in 0..random {
        let spec = &specs[seed as usize % specs.len()];
        let kind = KINDS[(seed / specs.len() as u64) as usize % 2];
        let n = rng.gen_range(2..=4);
        let workload = random_workload(&mut rng, spec, n, 8);
        let mut plan = SchedulePlan::random(seed);
        if rng.gen_bool(0.2) {
            plan = plan.with_crash(rng.gen_range(1..=n), rng.gen_range(0..40));
        }
        let rec = run(spec, Algorithm::Uc(kind), workload, plan, DEFAULT_MAX_STEPS)
            .map_err(|e| e.to_string())?;
        let context = || format!("random run {seed}, {kind:?} on {}", spec.name());
        mono.record(&rec, context);
        if let Some(f) = first_failure(&check_safety(&rec, spec, LIN_BOUND)) {
            return Err(format!("{}: {f}", context()));
        }
    }
    Ok(format!(
        "both constructions: {explored} reduced interleavings of 2 x 1 counter ops ({complete} complete, depth {DEPTH}) and {random} random runs, n <= 4, <= 8 ops"
    ))
}

fn monotonicity(mono: &Monotonicity) -> Outcome {
    match &mono.violation {
        Some(v) => Err(v.clone()),
        None => Ok(format!("{} construction records", mono.records)),
    }
}

fn figure_one(mono: &mut Monotonicity) -> Outcome {
    const SEEDS: u64 = 200;
    let fig1a = scenario(bundled("fig1a"), "fig1a.toml");
    sweep(&fig1a, SEEDS, mono, |r| {
        match r
            .operations
            .iter()
            .find(|o| o.phase == 1 && o.response_step == "pending")
        {
            Some(o) => Err(format!(
                "p{} {} after the boundary is pending",
                o.process, o.op
            )),
            None => Ok(()),
        }
    })?;
    let fig1b = scenario(bundled("fig1b"), "fig1b.toml");
    sweep(&fig1b, SEEDS, mono, |r| {
        if r.completed_all.is_empty() {
            Err("no process completed all of its operations".into())
        } else {
            Ok(())
        }
    })?;
    Ok(format!(
        "fig1a (cf-uc): every post-boundary update completes; fig1b (weak-uc): some process completes all ops; {SEEDS} seeds each"
    ))
}

fn solo_suffix(mono: &mut Monotonicity) -> Outcome {
    const SEEDS: u64 = 500;
    let text = bundled("solo-suffix");
    for algorithm in ["cf-uc", "weak-uc"] {
        let s = scenario(
            &text.replace(
                "algorithm = \"cf-uc\"",
                &format!("algorithm = \"{algorithm}\""),
            ),
            "solo-suffix.toml",
        );
        sweep(&s, SEEDS, mono, |_| Ok(()))?;
    }
    Ok(format!("both constructions, {SEEDS} seeds each"))
}

fn figure_two(mono: &mut Monotonicity) -> Outcome {
    const SEEDS: u64 = 200;
    for name in ["fig2a", "fig2b"] {
        sweep(&scenario(bundled(name), name), SEEDS, mono, |_| Ok(()))?;
    }
    Ok(format!(
        "fig2a resolving (cf-uc) and fig2b forgetting (weak-uc), {SEEDS} seeds each"
    ))
}

fn degenerate_relations(mono: &mut Monotonicity) -> Outcome {
    const SEEDS: u64 = 200;
    let none = scenario(
        bundled("degenerate-no-conflict"),
        "degenerate-no-conflict.toml",
    );
    let mut ops = 0;
    sweep(&none, SEEDS, mono, |r| {
        ops += r.operations.len();
        match r.operations.iter().find(|o| o.response_step == "pending") {
            Some(o) => Err(format!("p{} {} is pending", o.process, o.op)),
            None if !r.skipped.is_empty() => Err("operations were skipped".into()),
            None => Ok(()),
        }
    })?;
    let text = bundled("degenerate-total-conflict");
    for algorithm in ["cf-uc", "weak-uc"] {
        let s = scenario(
            &text.replace(
                "algorithm = \"cf-uc\"",
                &format!("algorithm = \"{algorithm}\""),
            ),
            "degenerate-total-conflict.toml",
        );
        sweep(&s, SEEDS, mono, |_| Ok(()))?;
    }
    Ok(format!(
        "empty relation: {ops} of {ops} ops complete; total relation: safety and solo progress on both constructions; {SEEDS} seeds each"
    ))
}

/// Rendered report with the timing line dropped.
fn without_timing(rendered: &str) -> String {
    rendered
        .lines()
        .filter(|l| !l.contains("\"wall_clock_ms\""))
        .collect::<Vec<_>>()
        .join("\n")
}

fn determinism() -> Outcome {
    let mut compared = 0;
    for (name, text) in BUNDLED {
        let s = scenario(text, name);
        for seed in 0..20 {
            let a = without_timing(&render(&run_scenario(&s, seed)));
            let b = without_timing(&render(&run_scenario(&s, seed)));
            if a != b {
                return Err(format!("{name} seed {seed}: reports differ"));
            }
            compared += 1;
        }
    }
    let small = scenario(
        "object = \"counter\"\nalgorithm = \"cf-uc\"\nprocesses = 2\n[[workload]]\nbefore = [\"inc\"]\n[[workload]]\nbefore = [\"read\"]\n",
        "two-by-one.toml",
    );
    let explored: Vec<String> = (0..2)
        .map(|_| {
            without_timing(&render(
                &explore(&small, 28, 0, true).expect("within budget"),
            ))
        })
        .collect();
    if explored[0] != explored[1] {
        return Err("explore reports differ".into());
    }
    if without_timing(&render(&oracle(3))) != without_timing(&render(&oracle(3))) {
        return Err("oracle reports differ".into());
    }
    Ok(format!("{compared} run reports, one explore and one oracle report byte-identical apart from timing"))
}

fn main() -> ExitCode {
    let mut mono = Monotonicity::default();
    let mut gca = GcaSweep::default();
    let mut outcomes: Vec<(&str, Outcome)> = Vec::new();
    let mut check = |label: &'static str, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let outcome = f();
        eprintln!("  ({label}: {:.1?})", start.elapsed());
        outcomes.push((label, outcome));
    };
    check(
        "trace algebra agrees with the brute-force oracle",
        &mut oracle_agreement,
    );
    check(
        "ret* is invariant under representatives and extensions",
        &mut ret_star_invariance,
    );
    check("graded consensus properties", &mut || {
        gca = gca_sweep();
        gca_properties(&gca)
    });
    check("every propose takes exactly four steps", &mut || {
        gca_step_count(&gca)
    });
    check("linearizability of both constructions", &mut || {
        linearizability(&mut mono)
    });
    check("eventually conflict-free scenarios", &mut || {
        figure_one(&mut mono)
    });
    check("solo-suffix progress", &mut || solo_suffix(&mut mono));
    check("resolving and forgetting scenarios", &mut || {
        figure_two(&mut mono)
    });
    check("degenerate conflict relations", &mut || {
        degenerate_relations(&mut mono)
    });
    check("determinism", &mut determinism);
    // Monotonicity is judged over every record the other criteria produced.
    let mono_outcome = monotonicity(&mono);
    outcomes.insert(5, ("round monotonicity in every record", mono_outcome));

    let mut failed = 0;
    for (i, (label, outcome)) in outcomes.iter().enumerate() {
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {label}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {label}: {why}", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria pass",
        outcomes.len() - failed,
        outcomes.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
