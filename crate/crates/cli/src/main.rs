use std::process::ExitCode;

use clap::Parser;
use tariff_nash_cli::{run, Cli};

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = Cli::parse();
    match run(&cli, &argv) {
        Ok(outcome) => {
            match &outcome.written {
                Some(path) => eprintln!("wrote {}", path.display()),
                None => print!("{}", outcome.text),
            }
            ExitCode::from(outcome.status)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
