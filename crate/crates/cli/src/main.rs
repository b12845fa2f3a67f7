//! Command-line driver: reads a run configuration, runs one computation, and writes CSV/JSON
//! results together with a manifest.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "lsgate", version, about = "Light-shift gate simulation and error analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration; the built-in defaults are used when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one configuration key, e.g. `--set beams.power_w=0.08`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory (overrides `output_dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Master seed (overrides `seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the resolved configuration as TOML.
    Config,
    /// Normal modes and Lamb-Dicke parameters.
    Modes,
    /// Segment list of the gate schedule.
    Schedule,
    /// Staged gate simulation at the configured tier.
    Simulate,
    /// Transient populations of the off-resonant channels.
    Populations,
    /// Error budget.
    Budget,
    /// Symmetric-subspace randomized benchmarking.
    Srb {
        #[command(subcommand)]
        action: SrbAction,
    },
    /// Evaluate summary figures over a grid of one configuration value.
    Sweep {
        /// Dotted configuration key, e.g. `scheme.delta_hz`.
        #[arg(long)]
        param: String,
        /// Explicit grid values.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        values: Vec<f64>,
        /// Generated grid `lin:START:STOP:N` or `log:START:STOP:N`.
        #[arg(long)]
        grid: Option<String>,
        /// Also calibrate and simulate the gate at this tier for every point.
        #[arg(long)]
        simulate: Option<TierArg>,
    },
}

#[derive(Debug, Subcommand)]
enum SrbAction {
    /// Write the compiled Clifford catalog and the random sequences.
    Generate,
    /// Simulate a dataset with the configured noise and fit it.
    Simulate,
    /// Fit a dataset read from CSV.
    Fit {
        #[arg(long)]
        data: PathBuf,
    },
    /// Expected survival of gap-benchmarking sequences.
    Gap,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TierArg {
    Sdf,
    Lightshift,
    Full,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
