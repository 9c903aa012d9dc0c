use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use pontus_cli::{commands, write_outcome, Format, RunConfig};
use pontus_core::dynamics::TrelMode;

#[derive(Parser)]
#[command(name = "pontus", version, about = "Relaxation experiments on a dissipative tight-binding chain")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML run configuration
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (overrides output.dir)
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    /// Relaxation threshold delta (overrides numerics.threshold)
    #[arg(long, global = true)]
    threshold: Option<f64>,

    #[arg(long, global = true, value_enum)]
    trel_mode: Option<TrelModeArg>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Eigenvalues, stationary state and slowest modes
    Spectrum,
    /// Distance-to-equilibrium time series
    Relax,
    /// Relaxation time against preparation time
    Sweep,
    /// Classical birth-death limit against the quantum code
    Oracle,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum TrelModeArg {
    Settling,
    FirstCrossing,
}

fn load(cli: &Cli) -> Result<RunConfig> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| anyhow::anyhow!("--config <path> is required"))?;
    let mut cfg = RunConfig::load(path)?;
    if let Some(dir) = &cli.out {
        cfg.output.dir = dir.clone();
    }
    if let Some(f) = cli.format {
        cfg.output.format = f;
    }
    if let Some(t) = cli.threshold {
        cfg.numerics.threshold = t;
    }
    if let Some(m) = cli.trel_mode {
        cfg.numerics.trel_mode = match m {
            TrelModeArg::Settling => TrelMode::Settling,
            TrelModeArg::FirstCrossing => TrelMode::FirstCrossing,
        };
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<ExitCode> {
    let cfg = load(cli)?;
    let outcome = match cli.command {
        Command::Spectrum => commands::spectrum(&cfg),
        Command::Relax => commands::relax(&cfg),
        Command::Sweep => commands::sweep(&cfg),
        Command::Oracle => commands::oracle(&cfg),
    }?;
    for path in write_outcome(&outcome, &cfg.output.dir, cfg.output.format)? {
        println!("wrote {}", path.display());
    }
    if outcome.violations.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        for v in &outcome.violations {
            eprintln!("tolerance violated: {v}");
        }
        Ok(ExitCode::from(2))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            // --help / --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
