use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

use latticesir_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(json) => {
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(&json).and_then(|_| stdout.flush()).is_err() {
                return ExitCode::from(1);
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            let body = serde_json::to_string(&err.report()).unwrap_or_else(|_| err.to_string());
            eprintln!("{body}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
