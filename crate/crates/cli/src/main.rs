use std::process::ExitCode;

use clap::Parser;
use tet_assembly_lab::cli::Cli;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    tet_assembly_lab::run(Cli::parse())
}
