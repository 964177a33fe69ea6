use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ksgd_cli::commands::{self, exit, Options};

#[derive(Parser)]
#[command(name = "ksgd", version, about = "Keller-Segel simulator with gradient-dependent damping")]
struct Cli {
    /// Worker threads for sweeps (default: machine parallelism).
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    threads: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario; writes series.csv, final.snap and outcome.txt.
    Run { config: PathBuf, out_dir: PathBuf },
    /// Run a parameter sweep; writes sweep.csv.
    Sweep {
        config: PathBuf,
        out_dir: PathBuf,
        /// Keep each run's outputs in run_NNNN/ subdirectories.
        #[arg(long)]
        dense: bool,
    },
    /// Check the source hypotheses and derived constants.
    Check { config: PathBuf },
    /// Render series.csv or sweep.csv to a PNG.
    Plot { input: PathBuf, output: PathBuf },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::CONFIG as u8 } else { 0 });
        }
    };
    let opts = match (Options {
        threads: cli.threads.map(|t| t as usize),
        ..Options::default()
    })
    .with_env_seed()
    {
        Ok(opts) => opts,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let code = match cli.command {
        Command::Run { config, out_dir } => commands::cmd_run(&config, &out_dir, &opts),
        Command::Sweep {
            config,
            out_dir,
            dense,
        } => commands::cmd_sweep(&config, &out_dir, &Options { dense, ..opts }),
        Command::Check { config } => commands::cmd_check(&config),
        Command::Plot { input, output } => commands::cmd_plot(&input, &output),
    };
    ExitCode::from(code as u8)
}
