use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use solwave_cli::commands::{cmd_check, cmd_oracle, cmd_solve, cmd_sweep, CliError};
use solwave_cli::config::{parse_config, Overrides};

/// Least energy bound states of coupled cubic Schrödinger systems.
#[derive(Parser)]
#[command(name = "solwave", version, about)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Minimize the energy on the constraint set and write the state.
    Solve(CommonArgs),
    /// Re-solve along a ladder of coupling strengths, warm-starting each
    /// point from the previous one.
    Sweep(CommonArgs),
    /// Validate the configuration, and a solution file when one is named.
    Check(CommonArgs),
    /// Cross-validate the fast paths against brute-force references.
    Oracle(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Problem description (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Override the solver seed from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the number of grid nodes from the config.
    #[arg(long)]
    grid: Option<usize>,
    /// Run the fresh baselines of a sweep across threads. Warm starts stay
    /// sequential; only `sweep` reads this flag.
    #[arg(long)]
    parallel_fresh: bool,
}

fn run() -> Result<(), CliError> {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e)
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) =>
        {
            print!("{e}");
            return Ok(());
        }
        Err(e) => {
            // Usage errors carry their own "error:" prefix and styling.
            eprint!("{e}");
            std::process::exit(2);
        }
    };

    let args = match &cli.cmd {
        Cmd::Solve(a) | Cmd::Sweep(a) | Cmd::Check(a) | Cmd::Oracle(a) => a,
    };
    let text = fs::read_to_string(&args.config)
        .map_err(|e| CliError::Io(format!("{}: {e}", args.config.display())))?;
    let overrides = Overrides { seed: args.seed, grid_n: args.grid };
    let cfg = parse_config(&text, &overrides).map_err(|e| CliError::Config(e.to_string()))?;
    match &cli.cmd {
        Cmd::Solve(_) => cmd_solve(&cfg, &args.out),
        Cmd::Sweep(_) => cmd_sweep(&cfg, &args.out, args.parallel_fresh),
        Cmd::Check(_) => cmd_check(&cfg, &args.out),
        Cmd::Oracle(_) => cmd_oracle(&cfg, &args.out),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
