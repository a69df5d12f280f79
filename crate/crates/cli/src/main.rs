use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ordstat_cli::{
    commands, render_all, CliError, CliResult, Format, Options, Precision, RunConfig,
};

#[derive(Parser)]
#[command(name = "ordstat", version)]
#[command(
    about = "Moments of order statistics and coherent-system lifetimes for discrete dependent data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Run configuration (TOML)
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output layout
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    format: Format,

    /// Decimal places, or `full` for shortest round-trip digits
    #[arg(long, global = true, default_value = "3")]
    precision: Precision,

    /// Seed for Monte Carlo checks
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Truncation error bound, overriding the config
    #[arg(long, global = true)]
    d: Option<f64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Moments of every requested order statistic
    Orderstat,
    /// Moments of a coherent-system lifetime
    System,
    /// Subset coefficients and signatures of a structure
    Signature,
    /// System moments over a parameter grid, plot-ready
    Sweep,
    /// Oracle cross-checks of the analytic results
    Validate,
}

fn run(cli: &Cli) -> CliResult<String> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::config("--config <path> is required"))?;
    let cfg = RunConfig::from_path(path)?;
    let opts = Options {
        precision: cli.precision,
        seed: cli.seed,
        d: cli.d,
    };
    let tables = match cli.command {
        Command::Orderstat => commands::orderstat(&cfg, &opts)?,
        Command::System => commands::system(&cfg, &opts)?,
        Command::Signature => commands::signature(&cfg)?,
        Command::Sweep => commands::sweep(&cfg, &opts)?,
        Command::Validate => commands::validate(&cfg, &opts)?,
    };
    Ok(render_all(&tables, cli.format))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("ordstat: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
