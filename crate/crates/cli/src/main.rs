use std::io;
use std::process::ExitCode;

use clap::Parser;
use fpqsim_cli::args::Cli;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = io::stdout();
    match fpqsim_cli::run(cli, &mut stdout.lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fpqsim: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
