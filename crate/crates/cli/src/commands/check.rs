//! `check`: run the built-in derivative oracles and structural identity
//! checks on a random instance; nonzero exit on any failure.

use stiefel_jd::verify::run_suite;

use crate::{CheckArgs, CliError};

pub fn run(args: CheckArgs) -> Result<(), CliError> {
    if args.p == 0 || args.p > args.n || args.n > 12 {
        return Err(CliError::input(format!(
            "check requires 1 <= p <= n <= 12, got n={} p={}",
            args.n, args.p
        )));
    }
    if args.num_matrices == 0 {
        return Err(CliError::input("num_matrices must be >= 1"));
    }
    let checks = run_suite(args.n, args.p, args.num_matrices, args.seed)?;
    let mut failed = 0usize;
    for c in &checks {
        println!("{c}");
        if !c.passed {
            failed += 1;
        }
    }
    println!(
        "checks={} passed={} failed={failed}",
        checks.len(),
        checks.len() - failed
    );
    if failed > 0 {
        return Err(CliError::numerical(format!("{failed} check(s) failed")));
    }
    Ok(())
}
