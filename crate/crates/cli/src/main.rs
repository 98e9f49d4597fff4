use std::process::ExitCode;

use clap::Parser;
use padpress_cli::{init_logging, run, Cli};

fn main() -> ExitCode {
    init_logging();
    let cli = Cli::parse();
    let stdout = std::io::stdout();
    match run(&cli, &mut stdout.lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            for finding in e.findings() {
                eprintln!("  {finding}");
            }
            ExitCode::FAILURE
        }
    }
}
