mod args;
mod commands;

use std::io::{self, Write};
use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use commands::CliError;

fn run(cli: Cli) -> Result<(), CliError> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match &cli.command {
        Command::Analyze(a) => commands::analyze(a, &mut out),
        Command::Sweep(a) => commands::sweep(a, &mut out),
        Command::Fit(a) => commands::fit(a, &mut out),
        Command::Separate(a) => commands::separate(a, &mut out),
        Command::Eval(a) => commands::eval(a, &mut out),
        Command::InitRandom(a) => commands::init_random_cmd(a, &mut out),
    }?;
    out.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
