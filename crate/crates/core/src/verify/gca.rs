//! The GCA specification, evaluated per instance over a record's ledger.

use std::collections::{BTreeMap, BTreeSet};

use super::Verdict;
use crate::gca::CmdTrace;
use crate::objects::Command;
use crate::sim::record::{ExecutionRecord, GcaLedgerEntry};
use crate::trace;

/// Shared-memory steps of a complete `propose`.
pub const PROPOSE_STEPS: u32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum GcaProperty {
    Validity,
    Adoption,
    Commitment,
    Convergence,
    CommonPrefix,
    WeakAgreement,
    WaitFreedom,
}

impl GcaProperty {
    pub const ALL: [GcaProperty; 7] = [
        GcaProperty::Validity,
        GcaProperty::Adoption,
        GcaProperty::Commitment,
        GcaProperty::Convergence,
        GcaProperty::CommonPrefix,
        GcaProperty::WeakAgreement,
        GcaProperty::WaitFreedom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GcaProperty::Validity => "gca.validity",
            GcaProperty::Adoption => "gca.adoption",
            GcaProperty::Commitment => "gca.commitment",
            GcaProperty::Convergence => "gca.convergence",
            GcaProperty::CommonPrefix => "gca.common-prefix",
            GcaProperty::WeakAgreement => "gca.weak-agreement",
            GcaProperty::WaitFreedom => "gca.wait-freedom",
        }
    }
}

/// One verdict per (instance, property), in round order.
pub fn check_gca_properties(record: &ExecutionRecord) -> Vec<(u64, GcaProperty, Verdict)> {
    let mut rounds: BTreeMap<u64, Vec<&GcaLedgerEntry>> = BTreeMap::new();
    for e in &record.gca_ledger {
        rounds.entry(e.round).or_default().push(e);
    }
    let mut out = Vec::new();
    for (round, entries) in rounds {
        for prop in GcaProperty::ALL {
            let name = format!("{}[round {round}]", prop.name());
            let verdict = Verdict::from_result(name, check_instance(prop, &entries));
            out.push((round, prop, verdict));
        }
    }
    out
}

/// Evaluates one property on the calls of one instance.
pub fn check_instance(prop: GcaProperty, entries: &[&GcaLedgerEntry]) -> Result<(), String> {
    let inputs: Vec<&CmdTrace> = entries.iter().map(|e| &e.input).collect();
    let returned: Vec<(&GcaLedgerEntry, &CmdTrace, bool)> = entries
        .iter()
        .filter_map(|e| e.output.as_ref().map(|o| (*e, &o.trace, o.committed)))
        .collect();
    match prop {
        GcaProperty::Validity => {
            let allowed: BTreeSet<Command> = inputs
                .iter()
                .flat_map(|s| s.letters().iter().copied())
                .collect();
            for (e, t, _) in &returned {
                if let Some(x) = t.letters().iter().find(|x| !allowed.contains(x)) {
                    return Err(format!(
                        "p{} output {t} contains {x}, proposed by nobody",
                        e.process
                    ));
                }
            }
            Ok(())
        }
        GcaProperty::Adoption => {
            for (ei, ti, ci) in &returned {
                if !ci {
                    continue;
                }
                for (ej, tj, _) in &returned {
                    if !ti.is_prefix_of(tj) {
                        return Err(format!(
                            "p{} committed {ti} but p{} returned {tj}",
                            ei.process, ej.process
                        ));
                    }
                }
            }
            Ok(())
        }
        GcaProperty::Commitment => {
            let owned: Vec<CmdTrace> = inputs.iter().map(|s| (*s).clone()).collect();
            if returned.len() != entries.len() || !trace::compatible(&owned) {
                return Ok(());
            }
            if returned
                .iter()
                .any(|(e, t, c)| *c && e.input.is_prefix_of(t))
            {
                Ok(())
            } else {
                Err("compatible inputs, every proposer returned, nobody committed an extension of its input".into())
            }
        }
        GcaProperty::Convergence => {
            let outputs: Vec<CmdTrace> = returned.iter().map(|(_, t, _)| (*t).clone()).collect();
            if trace::compatible(&outputs) {
                Ok(())
            } else {
                Err(format!(
                    "outputs {} are incompatible",
                    outputs
                        .iter()
                        .map(ToString::to_string)
                        .collect::<Vec<_>>()
                        .join(", ")
                ))
            }
        }
        GcaProperty::CommonPrefix => {
            let owned: Vec<CmdTrace> = inputs.iter().map(|s| (*s).clone()).collect();
            let Ok(common) = trace::glb(&owned) else {
                return Ok(());
            };
            match returned.iter().find(|(_, t, _)| !common.is_prefix_of(t)) {
                Some((e, t, _)) => Err(format!(
                    "common input prefix {common} is not a prefix of p{}'s output {t}",
                    e.process
                )),
                None => Ok(()),
            }
        }
        GcaProperty::WeakAgreement => {
            if inputs.windows(2).any(|w| w[0] != w[1]) {
                return Ok(());
            }
            match returned.iter().find(|(_, _, c)| !c) {
                Some((e, t, _)) => Err(format!("equal inputs, yet p{} adopted {t}", e.process)),
                None => Ok(()),
            }
        }
        GcaProperty::WaitFreedom => {
            for e in entries {
                let ok = match e.output {
                    Some(_) => e.steps == PROPOSE_STEPS,
                    None => e.steps < PROPOSE_STEPS,
                };
                if !ok {
                    return Err(format!(
                        "p{} spent {} steps in a propose that {}",
                        e.process,
                        e.steps,
                        if e.output.is_some() {
                            "returned"
                        } else {
                            "is pending"
                        }
                    ));
                }
            }
            Ok(())
        }
    }
}
