//! Runs the ten acceptance criteria at their stated sizes and tolerances and
//! prints one pass/fail line per criterion. Exits nonzero if any fails.

use std::process::ExitCode;

use arak_core::harness::acceptance::{run_all, CriterionOutcome};
use arak_core::harness::Thresholds;

const SEED: u64 = 20_261_016;

fn main() -> ExitCode {
    let outcomes: Vec<CriterionOutcome> = run_all(SEED, &Thresholds::default());
    for o in &outcomes {
        println!("{}", o.line());
        for r in &o.reports {
            println!("    {}", r.line());
        }
    }
    let failed: Vec<u8> = outcomes.iter().filter(|o| !o.pass()).map(|o| o.id).collect();
    if outcomes.len() != 10 || !failed.is_empty() {
        println!("failing criteria: {failed:?}");
        return ExitCode::FAILURE;
    }
    println!("acceptance: all {} criteria pass", outcomes.len());
    ExitCode::SUCCESS
}
