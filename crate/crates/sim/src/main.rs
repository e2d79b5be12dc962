use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = bb84_sim::cli::Cli::parse();
    match bb84_sim::cli::execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
