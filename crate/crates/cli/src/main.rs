use std::process::ExitCode;

use clap::Parser;
use sympcool_cli::{execute, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("sympcool: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
