use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use cfuc_cli::{commands, load_scenario, report};
use clap::{Parser, Subcommand};

/// Exit statuses besides success.
const VERDICT_FAILED: u8 = 1;
const BAD_INPUT: u8 = 2;
const BUDGET_EXCEEDED: u8 = 3;

#[derive(Parser)]
#[command(
    name = "cfuc",
    version,
    about = "Simulate and check conflict-free universal constructions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one seeded execution of a scenario and check it.
    Run {
        /// Scenario file, or the name of a bundled scenario.
        #[arg(long)]
        config: String,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        report: PathBuf,
    },
    /// Check every interleaving of a scenario up to a number of steps.
    Explore {
        #[arg(long)]
        config: String,
        #[arg(long)]
        depth: u64,
        #[arg(long)]
        report: PathBuf,
        /// Seed for generated workloads.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Visit interleavings that differ only in the order of commuting steps.
        #[arg(long)]
        no_reduction: bool,
    },
    /// Compare the trace algebra with the brute-force oracle.
    Oracle {
        #[arg(long)]
        max_len: usize,
    },
}

fn write(path: &PathBuf, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn verdict_status(all_hold: bool) -> ExitCode {
    if all_hold {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(VERDICT_FAILED)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(BAD_INPUT)
        }
    }
}

fn execute(command: Command) -> Result<ExitCode> {
    match command {
        Command::Run {
            config,
            seed,
            report: out,
        } => {
            let scenario = load_scenario(&config)?;
            let r = commands::run_scenario(&scenario, seed);
            write(&out, &report::render(&r))?;
            for v in r.verdicts.iter().filter(|v| !v.holds) {
                eprintln!(
                    "FAILED {}: {}",
                    v.property,
                    v.witness.as_deref().unwrap_or("")
                );
            }
            println!(
                "{}: {} verdicts, {}; report written to {}",
                r.scenario,
                r.verdicts.len(),
                if r.all_hold {
                    "all hold"
                } else {
                    "some failed"
                },
                out.display()
            );
            Ok(verdict_status(r.all_hold))
        }
        Command::Explore {
            config,
            depth,
            report: out,
            seed,
            no_reduction,
        } => {
            let scenario = load_scenario(&config)?;
            let r = match commands::explore(&scenario, depth, seed, !no_reduction) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("error: {e}");
                    return Ok(ExitCode::from(BUDGET_EXCEEDED));
                }
            };
            write(&out, &report::render(&r))?;
            if let Some(c) = &r.counterexample {
                for v in &c.failed {
                    eprintln!(
                        "COUNTEREXAMPLE (execution {}) {}: {}",
                        c.execution,
                        v.property,
                        v.witness.as_deref().unwrap_or("")
                    );
                }
            }
            println!(
                "{}: {} executions ({} cut at depth {depth}), {}; report written to {}",
                r.scenario,
                r.stats.executions,
                r.stats.truncated,
                if r.all_hold {
                    "all checks hold"
                } else {
                    "counterexample found"
                },
                out.display()
            );
            Ok(verdict_status(r.all_hold))
        }
        Command::Oracle { max_len } => {
            let r = commands::oracle(max_len);
            for (check, count) in &r.counts {
                println!("{check}: {count}");
            }
            match &r.mismatch {
                None => println!(
                    "total: {} instances agree (max_len {}, pairs and triples up to total length {}) in {:.1} s",
                    r.total,
                    r.bounds.max_len,
                    r.bounds.max_total,
                    r.timing.wall_clock_ms / 1e3
                ),
                Some(m) => println!(
                    "MISMATCH in {}: {} (expected {}, got {})",
                    m.check, m.instance, m.expected, m.got
                ),
            }
            Ok(verdict_status(r.all_hold))
        }
    }
}
