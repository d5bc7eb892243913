use std::io::{self, Write};
use std::process::ExitCode;

use bregcirc_cli::{execute, Cli};
use clap::Parser;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let code = match execute(&cli, &mut out) {
        Ok(outcome) => outcome.exit_code(),
        Err(e) => {
            let _ = out.flush();
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    let _ = out.flush();
    ExitCode::from(code)
}
