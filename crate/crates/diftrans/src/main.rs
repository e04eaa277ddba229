use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = diftrans::cli::Cli::parse();
    match diftrans::cli::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
