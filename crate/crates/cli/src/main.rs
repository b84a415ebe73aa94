use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = aesthete_cli::Cli::parse();
    match aesthete_cli::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
