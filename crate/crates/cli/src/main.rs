use std::path::PathBuf;
use std::process::ExitCode;

use branchsim::{CliError, ScenarioConfig};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "branchsim", version, about = "Mean-field branch dynamics scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario described by a config file.
    Run { config: PathBuf },
    /// Run one scenario per value of a parameter and tabulate the results.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, allow_hyphen_values = true)]
        values: String,
    },
    /// Run the oracle battery.
    Check {
        #[arg(long)]
        filter: Option<String>,
        #[arg(long, default_value = "check-out")]
        output: PathBuf,
    },
}

fn dispatch(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Run { config } => {
            let cfg = ScenarioConfig::load(&config)?;
            branchsim::with_thread_cap(|| branchsim::run(&cfg)).map(drop)
        }
        Command::Sweep { config, param, values } => {
            let cfg = ScenarioConfig::load(&config)?;
            let values: Vec<String> =
                values.split(',').map(str::trim).filter(|v| !v.is_empty()).map(String::from).collect();
            branchsim::with_thread_cap(|| branchsim::sweep(&cfg, &param, &values)).map(drop)
        }
        Command::Check { filter, output } => branchsim::with_thread_cap(|| branchsim::check(filter, output)).map(drop),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("branchsim: {e}");
            ExitCode::from(&e)
        }
    }
}
