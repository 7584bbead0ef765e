use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use groupperm_cli::{execute, write_outputs, Cli, CliError};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::validation("--threads must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::validation(format!("cannot start thread pool: {e}")))?;
    }
    let outcome = execute(cli)?;
    if let Some(json) = write_outputs(&outcome, cli.out.as_deref())? {
        std::io::stdout()
            .write_all(json.as_bytes())
            .map_err(|e| CliError::Io(format!("cannot write report: {e}")))?;
    }
    Ok(())
}
