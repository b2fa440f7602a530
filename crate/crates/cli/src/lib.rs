//! Harness behind the `tet-assembly-lab` binary: verification, timing,
//! thread sweeps, roofline data and markdown reports.

pub mod bench;
pub mod cli;
pub mod commands;
pub mod report;

use std::process::ExitCode;

pub use bench::{BenchRecord, SweepSpec};
pub use commands::Status;

/// Exit code when a variant disagrees with the reference assembly.
pub const EXIT_VERIFY: u8 = 1;
/// Exit code for invalid arguments or unreadable input.
pub const EXIT_USAGE: u8 = 2;

pub fn run(cli: cli::Cli) -> ExitCode {
    use cli::Command;
    let result = match &cli.command {
        Command::Verify(a) => commands::verify(a),
        Command::Bench(a) => commands::bench(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::Roofline(a) => commands::roofline(a),
        Command::Report(a) => commands::report(a),
    };
    match result {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::VerificationFailed) => ExitCode::from(EXIT_VERIFY),
        Err(e) => {
            eprintln!("error: {e:#}");
            eprintln!("run `tet-assembly-lab --help` for usage");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
