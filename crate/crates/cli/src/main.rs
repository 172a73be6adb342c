//! Command-line driver: benchmark runs, library comparisons, reproducibility
//! trials and clock-synchronization sweeps on the simulated cluster.

mod commands;
mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use benchlab::clocksync::SyncMethod;
use benchlab::par::Execution;
use benchlab::stats::Alternative;
use clap::{Args, Parser, Subcommand};

use config::RunConfig;

#[derive(Parser)]
#[command(name = "benchlab", version, about = "Simulated MPI benchmarking laboratory")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// Output directory for CSV files.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Master seed, overriding the configuration.
    #[arg(long, env = "BENCHLAB_SEED")]
    seed: Option<u64>,
    /// Worker threads; 1 runs everything on the calling thread.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

#[derive(Subcommand)]
enum Cmd {
    /// Clock-synchronization accuracy against duration.
    SyncEval {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated subset of the configured methods.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        methods: Option<Vec<SyncMethod>>,
        #[command(flatten)]
        common: Common,
    },
    /// Run a benchmark plan and summarize it.
    Bench {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Compare two libraries run under the same plan.
    Compare {
        /// Exactly two configurations: library A, then library B.
        #[arg(long, num_args = 1, required = true)]
        config: Vec<PathBuf>,
        /// Overrides the alternative hypothesis of configuration A.
        #[arg(long)]
        alternative: Option<Alternative>,
        #[command(flatten)]
        common: Common,
    },
    /// Repeat the plan and a single-launch baseline to measure spread.
    Repro {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

fn load(path: &Path, seed: Option<u64>) -> anyhow::Result<RunConfig> {
    Ok(RunConfig::load(path).with_context(|| format!("loading {}", path.display()))?.with_seed(seed))
}

fn execution(jobs: usize) -> anyhow::Result<Execution> {
    if jobs == 1 {
        return Ok(Execution::Sequential);
    }
    if jobs > 1 {
        rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global().context("configuring worker threads")?;
    }
    Ok(Execution::available())
}

fn run(cli: Cli) -> anyhow::Result<String> {
    match cli.cmd {
        Cmd::SyncEval { config, methods, common } => {
            let cfg = load(&config, common.seed)?;
            let methods = methods.unwrap_or_else(|| cfg.sync_eval.methods.clone());
            Ok(commands::sync_eval(&cfg, &methods, &common.out, execution(common.jobs)?)?)
        }
        Cmd::Bench { config, common } => {
            let cfg = load(&config, common.seed)?;
            Ok(commands::bench(&cfg, &common.out, execution(common.jobs)?)?)
        }
        Cmd::Compare { config, alternative, common } => {
            let [a, b] = config.as_slice() else {
                return Err(benchlab::Error::Config(format!("compare needs exactly two --config files, got {}", config.len())).into());
            };
            let (a, b) = (load(a, common.seed)?, load(b, common.seed)?);
            let alt = alternative.unwrap_or(a.report.alternative);
            Ok(commands::compare(&a, &b, alt, &common.out, execution(common.jobs)?)?)
        }
        Cmd::Repro { config, common } => {
            let cfg = load(&config, common.seed)?;
            Ok(commands::repro(&cfg, &common.out, execution(common.jobs)?)?)
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    use benchlab::Error as E;
    match err.chain().find_map(|e| e.downcast_ref::<E>()) {
        Some(E::Config(_) | E::Toml(_) | E::PlanMismatch(_) | E::InvalidArgument(_) | E::UnknownCollective(_)) => 2,
        Some(E::EmptySample(_) | E::InsufficientData(_)) => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(table) => {
            print!("{table}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
