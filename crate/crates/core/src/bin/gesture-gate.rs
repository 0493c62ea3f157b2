use std::process::ExitCode;

use clap::Parser;
use gesture_gate::cli::{self, Cli};
use gesture_gate::{par, EXIT_USAGE};

fn main() -> ExitCode {
    if let Ok(v) = std::env::var("GESTURE_GATE_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                par::init_threads(n);
            }
            _ => {
                eprintln!("error: GESTURE_GATE_THREADS must be a positive integer, got `{v}`");
                return ExitCode::from(EXIT_USAGE as u8);
            }
        }
    }
    match cli::run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
