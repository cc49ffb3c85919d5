//! Acceptance suite: one line per criterion at full simulation budget.
//!
//! Criteria listed in `UNMET` are known not to hold for this model; they are still run and
//! reported, but only a regression on any other criterion (or a check that errors) fails
//! the target.

use std::process::ExitCode;
use std::time::Instant;

use uavnet::config::Config;
use uavnet::validation::{run_all, Budget};

const UNMET: [u8; 3] = [10, 11, 12];

fn main() -> ExitCode {
    let start = Instant::now();
    let cat0 = Config::cat0();
    let nbiot = Config::nbiot();
    let outcomes = run_all(&cat0, &nbiot, &Budget::full());
    let mut regressions = Vec::new();
    for o in &outcomes {
        println!("{o}");
        let errored = o.detail.starts_with("error:");
        if errored || (!o.passed && !UNMET.contains(&o.id)) {
            regressions.push(o.id);
        }
        if o.passed && UNMET.contains(&o.id) {
            println!("note: criterion {} now passes; remove it from the unmet list", o.id);
        }
    }
    let met = outcomes.iter().filter(|o| o.passed).count();
    println!("acceptance: {met}/{} criteria met in {:.1} s", outcomes.len(), start.elapsed().as_secs_f64());
    if regressions.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("acceptance: unexpected failures in criteria {regressions:?}");
        ExitCode::FAILURE
    }
}
