use std::process::ExitCode;

use clap::Parser;
use gossip_aoi_cli::{run, write_report, RunConfig};

/// Exit status when `compare` finds a row outside the threshold.
const COMPARE_FAILED: u8 = 3;

fn main() -> ExitCode {
    let config = RunConfig::parse();
    let result = run(&config).and_then(|outcome| {
        write_report(&config, &outcome.report)?;
        Ok(outcome.passed)
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("compare: at least one moment lies outside the threshold");
            ExitCode::from(COMPARE_FAILED)
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
