//! The `bench` command: run the built-in benchmark suite and print one
//! pass/fail line per check. The command exits 0 even when checks fail —
//! a FAIL line is a reported measurement, not a command error.

use crate::acceptance;
use crate::args::BenchArgs;
use crate::error::{CliError, CliResult};

/// Run the bench command.
pub fn run(args: &BenchArgs) -> CliResult<()> {
    let indices: Vec<usize> = match &args.only {
        None => (1..=8).collect(),
        Some(list) => {
            let mut indices = list.clone();
            indices.sort_unstable();
            indices.dedup();
            if indices.is_empty() || indices.iter().any(|&i| i == 0 || i > 8) {
                return Err(CliError::validation(
                    "--only takes check numbers between 1 and 8",
                ));
            }
            indices
        }
    };
    let binary = std::env::current_exe()
        .map_err(|e| CliError::numerical(format!("locating own executable: {}", e)))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.workers.unwrap_or(0))
        .build()
        .map_err(|e| CliError::numerical(format!("thread pool: {}", e)))?;
    let reports = pool.install(|| acceptance::run_selected(&indices, &binary));
    for report in &reports {
        println!("{}", report.line());
    }
    let passed = reports.iter().filter(|r| r.passed).count();
    println!("{} of {} checks passed", passed, reports.len());
    Ok(())
}
