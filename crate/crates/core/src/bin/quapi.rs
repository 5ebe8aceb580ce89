//! Command-line driver for the shipped experiments.
//!
//! Exit codes: 0 success, 2 config validation error, 3 resource limit.

use clap::{Args, Parser, Subcommand};
use quapi_core::harness::{self, HarnessError};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "quapi",
    about = "Path-integral dynamics of a two-level system with one or two baths",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment description (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides output.directory).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (0 = automatic).
    #[arg(long, default_value_t = 0)]
    workers: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Propagate once and write the trajectory CSV.
    Dynamics(Common),
    /// One trajectory per filter threshold plus a summary.
    FilterSweep(Common),
    /// One trajectory per memory cut-off plus an extended-memory benchmark.
    MemorySweep(Common),
    /// Exhaustive mask search ranked against the full-mask benchmark.
    MaskSearch(Common),
}

fn expected_kind(cmd: &Command) -> &'static str {
    match cmd {
        Command::Dynamics(_) => "dynamics",
        Command::FilterSweep(_) => "filter_sweep",
        Command::MemorySweep(_) => "memory_sweep",
        Command::MaskSearch(_) => "mask_search",
    }
}

fn common(cmd: &Command) -> &Common {
    match cmd {
        Command::Dynamics(c)
        | Command::FilterSweep(c)
        | Command::MemorySweep(c)
        | Command::MaskSearch(c) => c,
    }
}

fn run(cli: &Cli) -> Result<(), HarnessError> {
    let opts = common(&cli.command);
    let mut cfg = harness::parse_config(&opts.config)?;
    if let Some(dir) = &opts.out {
        cfg.directory = dir.clone();
    }
    let want = expected_kind(&cli.command);
    if cfg.experiment.name() != want {
        return Err(HarnessError::Validation(vec![format!(
            "experiment.kind: config says '{}', subcommand wants '{want}'",
            cfg.experiment.name()
        )]));
    }
    let body = || harness::run_experiment(&cfg);
    if opts.workers > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(opts.workers)
            .build()
            .map_err(|e| HarnessError::Validation(vec![format!("--workers: {e}")]))?;
        pool.install(body)
    } else {
        body()
    }
}

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
