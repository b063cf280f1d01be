//! Scenario files: TOML, validated up front, with every error pinned to the
//! line and column it comes from.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Range;
use std::path::Path;

use cfuc_core::sim::memory::Fault;
use cfuc_core::sim::plan::DEFAULT_FAIRNESS_BOUND;
use cfuc_core::sim::{Algorithm, ProcessWorkload, DEFAULT_MAX_LEAVES, DEFAULT_MAX_STEPS};
use cfuc_core::verify::linearizability::DEFAULT_BOUND;
use cfuc_core::verify::ProgressClass;
use cfuc_core::{
    spec_by_name, Op, Policy, ProcessId, SchedulePlan, SequentialSpec, SoloUntil, SoloWindow,
    UcKind, Workload,
};
use rand::distributions::WeightedIndex;
use rand::prelude::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use toml::Spanned;

/// The scenario file as written.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub object: Spanned<String>,
    pub algorithm: Spanned<String>,
    pub processes: Spanned<usize>,
    /// One entry per process, in process order.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub workload: Vec<Spanned<ProcessEntry>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<Spanned<GeneratorConfig>>,
    #[serde(default)]
    pub schedule: ScheduleConfig,
    #[serde(default)]
    pub budgets: BudgetConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checks: Option<Vec<Spanned<String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub progress: Option<ProgressConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fault: Option<Spanned<String>>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessEntry {
    #[serde(default)]
    pub before: Vec<Spanned<String>>,
    /// Drawn from once the phase boundary has passed.
    #[serde(default)]
    pub after: Vec<Spanned<String>>,
}

/// Random operation lists, drawn from the run's seed.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorConfig {
    /// Operation name to relative weight.
    pub mix: Spanned<BTreeMap<String, u32>>,
    /// Operations per process.
    pub count: usize,
    /// Index from which each process draws from `after_mix` instead, as its
    /// second-phase list.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conflict_free_after: Option<Spanned<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub after_mix: Option<Spanned<BTreeMap<String, u32>>>,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy: Option<Spanned<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<Vec<Spanned<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fairness_bound: Option<Spanned<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase_boundary: Option<Spanned<u64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub crash: Vec<CrashConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub solo: Vec<SoloConfig>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct CrashConfig {
    pub process: Spanned<usize>,
    /// The process stops after this many of its own steps.
    pub after_steps: u64,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SoloConfig {
    pub process: Spanned<usize>,
    pub start: Spanned<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end: Option<Spanned<u64>>,
    /// `"end"`, `"ops"` (with `count`) or `"fresh-commit"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub until: Option<Spanned<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<Spanned<usize>>,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<Spanned<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub progress_budget: Option<Spanned<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linearizability_bound: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_executions: Option<u64>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ProgressConfig {
    pub class: Spanned<String>,
}

/// A problem with a scenario file, located in it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub origin: String,
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}:{}: {}",
            self.origin, self.line, self.column, self.message
        )
    }
}

impl std::error::Error for ConfigError {}

/// Checks a scenario can request.
pub const CHECK_NAMES: &[&str] = &[
    "safety",
    "linearizability",
    "gca",
    "round-monotonicity",
    "same-round-commits",
    "snapshot-containment",
    "register-replay",
    "uc-responses",
    "helping",
    "progress",
];

pub const POLICY_NAMES: &[&str] = &["random", "round-robin", "scripted"];
pub const PROGRESS_NAMES: &[&str] = &[
    "eventually-conflict-free",
    "solo-suffix",
    "conflict-resolving",
    "conflict-forgetting",
];

#[derive(Debug, Clone)]
enum WorkloadSource {
    Lists(Workload),
    Generated {
        mix: Vec<(Op, u32)>,
        count: usize,
        split: Option<(usize, Vec<(Op, u32)>)>,
    },
}

/// A validated scenario, ready to run for any seed.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub config: ScenarioConfig,
    pub spec: SequentialSpec,
    pub kind: UcKind,
    pub n: usize,
    source: WorkloadSource,
    plan: SchedulePlan,
    pub max_steps: u64,
    /// Set in the file, or `None` for the default.
    pub progress_budget: Option<u64>,
    pub linearizability_bound: usize,
    pub max_executions: u64,
    /// Requested checks, `progress` excluded.
    pub checks: Vec<String>,
    pub progress: Option<ProgressClass>,
    pub fault: Option<Fault>,
}

impl Scenario {
    pub fn algorithm(&self) -> Algorithm {
        Algorithm::Uc(self.kind)
    }

    /// The progress budget in force and where it came from.
    pub fn progress_budget(&self) -> (u64, String) {
        match self.progress_budget {
            Some(b) => (b, "config".into()),
            None => {
                let per_round = self.algorithm().steps_per_round(self.n);
                (
                    200 * self.n as u64 * per_round,
                    format!("default: 200 x n x steps per round ({per_round})"),
                )
            }
        }
    }

    pub fn plan(&self, seed: u64) -> SchedulePlan {
        SchedulePlan {
            seed,
            ..self.plan.clone()
        }
    }

    /// Operation lists; a generator draws them from its own stream of
    /// `seed`, independent of the scheduler's.
    pub fn workload(&self, seed: u64) -> Workload {
        match &self.source {
            WorkloadSource::Lists(w) => w.clone(),
            WorkloadSource::Generated { mix, count, split } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(1);
                let draw = |rng: &mut ChaCha8Rng, mix: &[(Op, u32)]| {
                    let index = WeightedIndex::new(mix.iter().map(|(_, w)| *w))
                        .expect("weights validated positive");
                    mix[index.sample(rng)].0
                };
                let processes = (0..self.n)
                    .map(|_| {
                        let mut w = ProcessWorkload::default();
                        for k in 0..*count {
                            match split {
                                Some((from, after)) if k >= *from => {
                                    w.after.push(draw(&mut rng, after))
                                }
                                _ => w.before.push(draw(&mut rng, mix)),
                            }
                        }
                        w
                    })
                    .collect();
                Workload { processes }
            }
        }
    }

    pub fn wants(&self, check: &str) -> bool {
        self.checks.iter().any(|c| c == "safety" || c == check)
    }
}

/// Reads and validates a scenario file.
pub fn load(path: &Path) -> Result<Scenario, ConfigError> {
    let origin = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
        origin: origin.clone(),
        line: 0,
        column: 0,
        message: format!("cannot read the file: {e}"),
    })?;
    parse(&text, &origin)
}

struct Locator<'a> {
    text: &'a str,
    origin: &'a str,
}

impl Locator<'_> {
    fn at(&self, span: Range<usize>, message: impl Into<String>) -> ConfigError {
        let before = &self.text[..span.start.min(self.text.len())];
        let line = before.matches('\n').count() + 1;
        let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
        ConfigError {
            origin: self.origin.to_string(),
            line,
            column,
            message: message.into(),
        }
    }
}

fn op_of(loc: &Locator, spec: &SequentialSpec, name: &Spanned<String>) -> Result<Op, ConfigError> {
    spec.op(name.get_ref())
        .map_err(|e| loc.at(name.span(), e.to_string()))
}

fn mix_of(
    loc: &Locator,
    spec: &SequentialSpec,
    mix: &Spanned<BTreeMap<String, u32>>,
) -> Result<Vec<(Op, u32)>, ConfigError> {
    if mix.get_ref().is_empty() {
        return Err(loc.at(mix.span(), "an operation mix needs at least one operation"));
    }
    let mut out = Vec::new();
    for (name, &weight) in mix.get_ref() {
        let op = spec
            .op(name)
            .map_err(|e| loc.at(mix.span(), e.to_string()))?;
        if weight == 0 {
            return Err(loc.at(mix.span(), format!("operation {name} has weight 0")));
        }
        out.push((op, weight));
    }
    Ok(out)
}

fn process_in_range(loc: &Locator, p: &Spanned<usize>, n: usize) -> Result<ProcessId, ConfigError> {
    let v = *p.get_ref();
    if v == 0 || v > n {
        return Err(loc.at(p.span(), format!("process {v} is outside 1..={n}")));
    }
    Ok(v)
}

fn one_of(
    loc: &Locator,
    v: &Spanned<String>,
    what: &str,
    names: &[&str],
) -> Result<(), ConfigError> {
    if names.contains(&v.get_ref().as_str()) {
        Ok(())
    } else {
        Err(loc.at(
            v.span(),
            format!(
                "unknown {what} {:?}; expected one of {}",
                v.get_ref(),
                names.join(", ")
            ),
        ))
    }
}

/// Parses and validates scenario text; `origin` names it in errors.
pub fn parse(text: &str, origin: &str) -> Result<Scenario, ConfigError> {
    let loc = Locator { text, origin };
    let config: ScenarioConfig = toml::from_str(text).map_err(|e| {
        let span = e.span().unwrap_or(0..0);
        loc.at(span, e.message().trim().to_string())
    })?;

    let spec = spec_by_name(config.object.get_ref())
        .map_err(|e| loc.at(config.object.span(), e.to_string()))?;
    let kind = match Algorithm::by_name(config.algorithm.get_ref()) {
        Some(Algorithm::Uc(kind)) => kind,
        _ => {
            return Err(loc.at(
                config.algorithm.span(),
                format!(
                    "unknown algorithm {:?}; expected one of {}",
                    config.algorithm.get_ref(),
                    Algorithm::NAMES.join(", ")
                ),
            ))
        }
    };
    let n = *config.processes.get_ref();
    if n == 0 {
        return Err(loc.at(config.processes.span(), "processes must be at least 1"));
    }

    let source = match (&config.generator, config.workload.is_empty()) {
        (Some(g), true) => {
            let gen = g.get_ref();
            let mix = mix_of(&loc, &spec, &gen.mix)?;
            let split = match (&gen.conflict_free_after, &gen.after_mix) {
                (None, None) => None,
                (Some(from), Some(after)) => {
                    let after_ops = mix_of(&loc, &spec, after)?;
                    for (a, _) in &after_ops {
                        for (b, _) in &after_ops {
                            if spec.conflicts().conflicts(*a, *b) {
                                return Err(loc.at(
                                    after.span(),
                                    format!(
                                        "{a} and {b} conflict, so after_mix is not conflict-free"
                                    ),
                                ));
                            }
                        }
                    }
                    Some((*from.get_ref(), after_ops))
                }
                (Some(from), None) => {
                    return Err(loc.at(from.span(), "conflict_free_after needs an after_mix"))
                }
                (None, Some(after)) => {
                    return Err(loc.at(after.span(), "after_mix needs conflict_free_after"))
                }
            };
            WorkloadSource::Generated {
                mix,
                count: gen.count,
                split,
            }
        }
        (Some(g), false) => {
            return Err(loc.at(
                g.span(),
                "give either [[workload]] entries or a [generator], not both",
            ))
        }
        (None, true) => {
            return Err(loc.at(
                config.processes.span(),
                "no operations: add one [[workload]] entry per process or a [generator]",
            ))
        }
        (None, false) => {
            if config.workload.len() != n {
                return Err(loc.at(
                    config.workload[0].span(),
                    format!(
                        "{} [[workload]] entries for {n} processes",
                        config.workload.len()
                    ),
                ));
            }
            let mut processes = Vec::new();
            for entry in &config.workload {
                let e = entry.get_ref();
                processes.push(ProcessWorkload {
                    before: e
                        .before
                        .iter()
                        .map(|o| op_of(&loc, &spec, o))
                        .collect::<Result<_, _>>()?,
                    after: e
                        .after
                        .iter()
                        .map(|o| op_of(&loc, &spec, o))
                        .collect::<Result<_, _>>()?,
                });
            }
            WorkloadSource::Lists(Workload { processes })
        }
    };

    let budgets = &config.budgets;
    let max_steps = match &budgets.max_steps {
        Some(m) if *m.get_ref() == 0 => return Err(loc.at(m.span(), "max_steps must be positive")),
        Some(m) => *m.get_ref(),
        None => DEFAULT_MAX_STEPS,
    };
    let progress_budget = match &budgets.progress_budget {
        Some(b) if *b.get_ref() == 0 => {
            return Err(loc.at(b.span(), "progress_budget must be positive"))
        }
        b => b.as_ref().map(|b| *b.get_ref()),
    };

    let sched = &config.schedule;
    let policy = match &sched.policy {
        None => Policy::Random,
        Some(p) => {
            one_of(&loc, p, "policy", POLICY_NAMES)?;
            match p.get_ref().as_str() {
                "random" => Policy::Random,
                "round-robin" => Policy::RoundRobin,
                _ => {
                    let Some(order) = &sched.order else {
                        return Err(loc.at(p.span(), "a scripted policy needs an order"));
                    };
                    Policy::Scripted(
                        order
                            .iter()
                            .map(|q| process_in_range(&loc, q, n))
                            .collect::<Result<_, _>>()?,
                    )
                }
            }
        }
    };
    if let (Some(order), false) = (&sched.order, matches!(policy, Policy::Scripted(_))) {
        if let Some(first) = order.first() {
            return Err(loc.at(first.span(), "order is only used by the scripted policy"));
        }
    }
    let mut plan = SchedulePlan::new(0, policy);
    if let Some(b) = &sched.fairness_bound {
        if *b.get_ref() == 0 {
            return Err(loc.at(b.span(), "fairness_bound must be positive"));
        }
        plan.fairness_bound = *b.get_ref();
    } else {
        plan.fairness_bound = DEFAULT_FAIRNESS_BOUND;
    }
    if let Some(b) = &sched.phase_boundary {
        if *b.get_ref() > max_steps {
            return Err(loc.at(
                b.span(),
                format!(
                    "phase_boundary {} exceeds max_steps {max_steps}",
                    b.get_ref()
                ),
            ));
        }
        plan = plan.with_phase_boundary(*b.get_ref());
    }
    for c in &sched.crash {
        let p = process_in_range(&loc, &c.process, n)?;
        if plan.crash_points.contains_key(&p) {
            return Err(loc.at(
                c.process.span(),
                format!("process {p} already has a crash point"),
            ));
        }
        plan = plan.with_crash(p, c.after_steps);
    }
    for w in &sched.solo {
        let process = process_in_range(&loc, &w.process, n)?;
        let start = *w.start.get_ref();
        let end = match &w.end {
            Some(e) if *e.get_ref() < start => {
                return Err(loc.at(
                    e.span(),
                    format!(
                        "solo window ends at {} before it starts at {start}",
                        e.get_ref()
                    ),
                ))
            }
            Some(e) => *e.get_ref(),
            None => u64::MAX,
        };
        let until = match &w.until {
            None => SoloUntil::End,
            Some(u) => {
                one_of(&loc, u, "solo condition", &["end", "ops", "fresh-commit"])?;
                match (u.get_ref().as_str(), &w.count) {
                    ("ops", Some(c)) if *c.get_ref() > 0 => SoloUntil::Ops(*c.get_ref()),
                    ("ops", Some(c)) => return Err(loc.at(c.span(), "count must be positive")),
                    ("ops", None) => return Err(loc.at(u.span(), "until = \"ops\" needs a count")),
                    (_, Some(c)) => {
                        return Err(loc.at(c.span(), "count only applies to until = \"ops\""))
                    }
                    ("end", None) => SoloUntil::End,
                    _ => SoloUntil::FreshCommit,
                }
            }
        };
        plan = plan.with_solo(SoloWindow {
            process,
            start,
            end,
            until,
        });
    }

    let progress = match &config.progress {
        None => None,
        Some(p) => {
            one_of(&loc, &p.class, "progress class", PROGRESS_NAMES)?;
            Some(match p.class.get_ref().as_str() {
                "eventually-conflict-free" => ProgressClass::EventuallyConflictFree,
                "solo-suffix" => ProgressClass::SoloSuffix,
                "conflict-resolving" => ProgressClass::ConflictResolving,
                _ => ProgressClass::ConflictForgetting,
            })
        }
    };
    let mut checks = Vec::new();
    let mut wants_progress = progress.is_some();
    match &config.checks {
        None => checks.push("safety".to_string()),
        Some(list) => {
            wants_progress = false;
            for c in list {
                one_of(&loc, c, "check", CHECK_NAMES)?;
                if c.get_ref() == "progress" {
                    if progress.is_none() {
                        return Err(
                            loc.at(c.span(), "the progress check needs a [progress] section")
                        );
                    }
                    wants_progress = true;
                } else {
                    checks.push(c.get_ref().clone());
                }
            }
        }
    }

    let fault = match &config.fault {
        None => None,
        Some(f) => {
            one_of(&loc, f, "fault", &["isolated-scans"])?;
            Some(Fault::IsolatedScans)
        }
    };

    Ok(Scenario {
        name: config.name.clone().unwrap_or_else(|| {
            Path::new(origin)
                .file_stem()
                .map_or(origin.to_string(), |s| s.to_string_lossy().into_owned())
        }),
        spec,
        kind,
        n,
        source,
        plan,
        max_steps,
        progress_budget,
        linearizability_bound: budgets.linearizability_bound.unwrap_or(DEFAULT_BOUND),
        max_executions: budgets.max_executions.unwrap_or(DEFAULT_MAX_LEAVES),
        checks,
        progress: if wants_progress { progress } else { None },
        fault,
        config,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
object = "counter"
algorithm = "cf-uc"
processes = 2

[[workload]]
before = ["inc"]

[[workload]]
before = ["read"]
"#;

    fn err(text: &str) -> ConfigError {
        parse(text, "t.toml").expect_err("invalid scenario")
    }

    #[test]
    fn minimal_scenario_gets_defaults() {
        let s = parse(MINIMAL, "t.toml").unwrap();
        assert_eq!(s.name, "t");
        assert_eq!(s.max_steps, DEFAULT_MAX_STEPS);
        assert_eq!(s.checks, vec!["safety"]);
        assert_eq!(s.progress_budget().0, 200 * 2 * 9);
        assert_eq!(s.plan(5).seed, 5);
        assert_eq!(s.workload(1).total_ops(), 2);
    }

    #[test]
    fn unknown_operation_points_at_its_line() {
        let e = err(&MINIMAL.replace("[\"read\"]", "[\"read\", \"pop\"]"));
        assert_eq!((e.line, e.column), (10, 19));
        assert!(e.message.contains("pop"), "{e}");
    }

    #[test]
    fn syntax_error_points_at_its_line() {
        let e = err("object = \"counter\"\nalgorithm = \n");
        assert_eq!(e.line, 2);
    }

    #[test]
    fn unknown_key_is_rejected() {
        let e = err(&format!("{MINIMAL}\n[budgets]\nmax_step = 3\n"));
        assert_eq!(e.line, 13);
        assert!(e.message.contains("max_step"), "{e}");
    }

    #[test]
    fn semantic_errors_are_located() {
        let cases = [
            (MINIMAL.replace("\"counter\"", "\"stack\""), 2),
            (MINIMAL.replace("\"cf-uc\"", "\"paxos\""), 3),
            (MINIMAL.replace("processes = 2", "processes = 3"), 6),
            (
                format!("{MINIMAL}\n[schedule]\nphase_boundary = 30000\n"),
                13,
            ),
            (
                format!("{MINIMAL}\n[[schedule.crash]]\nprocess = 3\nafter_steps = 1\n"),
                13,
            ),
            (
                format!("{MINIMAL}\n[[schedule.solo]]\nprocess = 1\nstart = 4\nuntil = \"ops\"\n"),
                15,
            ),
            (
                MINIMAL.replace("processes = 2", "processes = 2\nchecks = [\"progress\"]"),
                5,
            ),
        ];
        for (text, line) in cases {
            assert_eq!(err(&text).line, line, "{text}");
        }
    }

    #[test]
    fn generator_after_mix_must_commute() {
        let text = r#"
object = "counter"
algorithm = "weak-uc"
processes = 3

[generator]
mix = { read = 1, inc = 1 }
count = 4
conflict_free_after = 2
after_mix = { read = 1, inc = 1 }
"#;
        assert_eq!(err(text).line, 10);
        let ok = parse(
            &text.replace(
                "after_mix = { read = 1, inc = 1 }",
                "after_mix = { inc = 1, dec = 1 }",
            ),
            "g",
        )
        .unwrap();
        let w = ok.workload(9);
        assert_eq!(w, ok.workload(9));
        assert!(w
            .processes
            .iter()
            .all(|p| p.before.len() == 2 && p.after.len() == 2));
    }
}
