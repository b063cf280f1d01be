//! Random inputs for simulations, drawn from a caller-supplied generator so
//! that a seed fixes them.

use rand::seq::SliceRandom;
use rand::Rng;

use super::Workload;
use crate::gca::CmdTrace;
use crate::objects::{Command, SequentialSpec};
use crate::trace::Trace;

/// `n` per-process operation lists with `1..=max_ops` operations in total
/// (at least one per process when `max_ops >= n`).
pub fn random_workload<R: Rng>(
    rng: &mut R,
    spec: &SequentialSpec,
    n: usize,
    max_ops: usize,
) -> Workload {
    let total = rng.gen_range(n.min(max_ops).max(1)..=max_ops.max(1));
    let mut lists = vec![Vec::new(); n];
    for k in 0..total {
        let p = if k < n { k } else { rng.gen_range(0..n) };
        lists[p].push(
            *spec
                .operations()
                .choose(rng)
                .expect("objects have operations"),
        );
    }
    Workload::single_phase(lists)
}

/// GCA inputs for `n` proposers. Each input is a random arrangement of a
/// random subset of a small shared pool of commands, so that inputs overlap,
/// sometimes agree and sometimes conflict. A proposer is absent with
/// probability `absent`.
pub fn random_gca_inputs<R: Rng>(
    rng: &mut R,
    spec: &SequentialSpec,
    n: usize,
    absent: f64,
) -> Vec<Option<CmdTrace>> {
    let pool: Vec<Command> = (1..=n)
        .flat_map(|p| (1..=2).map(move |seq| (p, seq)))
        .map(|(p, seq)| {
            Command::new(
                *spec
                    .operations()
                    .choose(rng)
                    .expect("objects have operations"),
                p,
                seq,
            )
        })
        .collect();
    let k = rng.gen_range(0..=2);
    let shared: Vec<Command> = pool.choose_multiple(rng, k).copied().collect();
    (0..n)
        .map(|_| {
            if rng.gen_bool(absent) {
                return None;
            }
            let mut letters = shared.clone();
            if rng.gen_bool(0.5) {
                letters.shuffle(rng);
            }
            let k = rng.gen_range(0..=2);
            for c in pool.choose_multiple(rng, k) {
                if !letters.contains(c) {
                    letters.push(*c);
                }
            }
            Some(Trace::from_schedule(&letters, spec.conflicts()))
        })
        .collect()
}
