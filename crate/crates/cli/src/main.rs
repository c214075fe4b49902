use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fme_cli::config::{Experiment, Overrides};
use fme_cli::{execute, EXIT_CONFIG, EXIT_SOLVER};

#[derive(Parser)]
#[command(
    name = "fme",
    version,
    about = "Feedback master equation sweeps and checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output CSV path; the manifest is written next to it.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Number of worker threads.
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Seed for the trajectory oracle.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Exit with status 2 if any grid point failed.
    #[arg(long, global = true)]
    strict: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Steady states of the two-qubit protocol over a z grid.
    TwoQubit,
    /// Steady states of rings of pair protocols.
    Ring,
    /// Dissipative Ising model over (g, alpha).
    Ising,
    /// Sufficient LOCC condition for a setup.
    LoccCheck,
    /// Trajectory simulation against the master equation.
    Oracle,
}

impl From<Command> for Experiment {
    fn from(c: Command) -> Self {
        match c {
            Command::TwoQubit => Experiment::TwoQubit,
            Command::Ring => Experiment::Ring,
            Command::Ising => Experiment::Ising,
            Command::LoccCheck => Experiment::LoccCheck,
            Command::Oracle => Experiment::Oracle,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_CONFIG as u8)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let overrides = Overrides {
        output: cli.out,
        workers: cli.workers,
        seed: cli.seed,
    };
    match execute(cli.command.into(), cli.config.as_deref(), &overrides) {
        Ok(s) => {
            println!(
                "wrote {} rows to {} ({} flagged), manifest {}",
                s.rows,
                s.output.display(),
                s.flagged,
                s.manifest.display()
            );
            if cli.strict && s.flagged > 0 {
                eprintln!("strict: {} grid points failed", s.flagged);
                ExitCode::from(EXIT_SOLVER as u8)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("fme: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
