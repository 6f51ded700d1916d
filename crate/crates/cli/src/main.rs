use std::path::PathBuf;
use std::process::ExitCode;

use berger_cli::error::exit;
use berger_cli::{oracle_check, report, run, sweep, CliResult};
use clap::{Parser, Subcommand};

/// Ricci flow of warped Berger metrics on S^1 x S^3.
#[derive(Parser)]
#[command(name = "berger-flow", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build, validate, evolve and diagnose one configuration.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every point of a `sweep.*` parameter grid.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare closed-form curvatures and evolution equations with
    /// independent discretizations.
    OracleCheck {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, hide = true)]
        corrupt_formula: bool,
    },
    /// Summarize a run or sweep directory.
    Report {
        #[arg(long)]
        out: PathBuf,
    },
}

fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Run { config, out } => {
            let outcome = run::cmd_run(&config, out.as_deref())?;
            print!("{}", report::render_summary(&outcome.summary));
        }
        Command::Sweep { config, workers, out } => {
            let outcome = sweep::cmd_sweep(&config, workers, out.as_deref())?;
            for r in &outcome.results {
                if let sweep::PointStatus::Failed { message, .. } = &r.status {
                    eprintln!("{}: {message}", r.point.dir_name());
                }
            }
            println!(
                "{} points, manifest in {}",
                outcome.results.len(),
                outcome.dir.join(sweep::MANIFEST_FILE).display()
            );
        }
        Command::OracleCheck { config, corrupt_formula } => {
            oracle_check::cmd_oracle_check(&config, corrupt_formula)?;
        }
        Command::Report { out } => {
            report::cmd_report(&out)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            let code = if e.use_stderr() { exit::CONFIG } else { exit::OK };
            return ExitCode::from(code as u8);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
