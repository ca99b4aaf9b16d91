//! `cohawkes`: command-line front end for the two-sided Hawkes toolkit.
//!
//! Exit codes: 0 on success, 1 on a model or run error (the message names the
//! module and the violated condition), 2 on a configuration or usage error.

mod commands;
mod config;
mod error;
mod export;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::Output;
use crate::config::RunConfig;
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "cohawkes", version, about = "Two-sided Hawkes service interactions: samplers, throughput analytics and queue experiments")]
struct Cli {
    /// JSON configuration file merged over the built-in defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override a configuration entry, e.g. `--set queue.arrivalRate=8`.
    /// Applied after the file, in order.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,

    /// Master seed for every random stream [default: the config's, else 1].
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads [default: all cores]. Outputs do not depend on it.
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Slowdown exponent; also the single sigma of `queue`.
    #[arg(long, global = true)]
    sigma: Option<f64>,

    /// Directory for output files.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample clusters and write their points (cluster.csv).
    Cluster {
        /// thinning, parking, markedThinning or dyckCluster.
        #[arg(long)]
        method: Option<String>,
        #[arg(long)]
        count: Option<usize>,
    },
    /// Throughput over a concurrency grid with its analytic bounds (sweep_k.csv).
    SweepK,
    /// Optimized throughput across interdependence splits (sweep_rho.csv).
    SweepRho,
    /// Queue experiment over the kappa and sigma grids (queue.csv).
    Queue {
        /// Also write the per-event log (events.csv).
        #[arg(long)]
        events: bool,
    },
    /// Run a verification suite (verify_report.json).
    Verify {
        /// kernels, combinatorics, cluster, marked, performance, queue or all.
        #[arg(long, default_value = "all")]
        suite: String,
    },
    /// Print the interdependence presets.
    Presets {
        #[arg(long)]
        name: Option<String>,
    },
}

fn overrides(cli: &Cli) -> Vec<String> {
    let mut ov = cli.overrides.clone();
    if let Some(seed) = cli.seed {
        ov.push(format!("seed={seed}"));
    }
    if let Some(sigma) = cli.sigma {
        ov.push(format!(r#"slowdown={{"kind":"polynomial","sigma":{sigma}}}"#));
        ov.push(format!("queue.sigmas=[{sigma}]"));
    }
    match &cli.command {
        Command::Cluster { method, count } => {
            if let Some(m) = method {
                ov.push(format!(r#"cluster.method="{m}""#));
            }
            if let Some(c) = count {
                ov.push(format!("cluster.count={c}"));
            }
        }
        _ => {}
    }
    ov
}

fn run(cli: &Cli) -> Result<(), CliError> {
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(CliError::Config("--workers must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot start {n} workers: {e}")))?;
    }
    let cfg = RunConfig::load(cli.config.as_deref(), &overrides(cli))?;
    match &cli.command {
        Command::Presets { name } => commands::presets(name.as_deref()),
        Command::Verify { suite } => commands::verify(cfg.seed, Some(suite), &Output::new(&cli.out)?),
        Command::Cluster { .. } => commands::cluster(&cfg, &Output::new(&cli.out)?),
        Command::SweepK => commands::sweep_k(&cfg, &Output::new(&cli.out)?),
        Command::SweepRho => commands::sweep_rho(&cfg, &Output::new(&cli.out)?),
        Command::Queue { events } => commands::queue(&cfg, &Output::new(&cli.out)?, *events),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
