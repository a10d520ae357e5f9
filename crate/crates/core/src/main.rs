use std::process::ExitCode;

use tfse_core::cli::{main_with_args, CliError};

fn main() -> ExitCode {
    match main_with_args(std::env::args().collect()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Help(text)) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("tfse: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
