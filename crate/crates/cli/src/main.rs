mod commands;
mod experiment;
mod manifest;
mod range;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use ibdash::scheduler::SchedulerKind;

use commands::Overrides;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, unreadable or invalid input files.
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Output(String),
    #[error("simulation failed: {0}")]
    Run(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Output(_) | CliError::Run(_) => 1,
        }
    }
}

/// Interference-aware DAG orchestration experiments on simulated edge fleets.
#[derive(Debug, Parser)]
#[command(name = "ibdash", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct RunFlags {
    /// Base seed (overrides the experiment file).
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (overrides the experiment file).
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Scheduler(s) to run instead of the file's list; repeatable.
    #[arg(long = "scheduler")]
    schedulers: Vec<SchedulerKind>,
    /// Worker threads; 0 or absent uses every core.
    #[arg(long)]
    jobs: Option<usize>,
}

impl From<RunFlags> for Overrides {
    fn from(f: RunFlags) -> Self {
        Overrides {
            seed: f.seed,
            out_dir: f.out_dir,
            schedulers: f.schedulers,
            jobs: f.jobs,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run every configured scheduler on the same seeds and fleet.
    Run {
        experiment: PathBuf,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Sweep one orchestrator parameter with the first configured scheduler.
    Sweep {
        experiment: PathBuf,
        /// alpha, beta or gamma.
        #[arg(long)]
        param: String,
        /// start:end:step, inclusive, or a single value.
        #[arg(long)]
        range: String,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Fit an exponential failure rate to an availability trace CSV
    /// (columns elapsed_s, availability).
    FitLambda {
        trace: PathBuf,
        /// Write a failure-rate table fragment to this file.
        #[arg(long, requires = "class")]
        write_fragment: Option<PathBuf>,
        /// Device class name used in the fragment.
        #[arg(long)]
        class: Option<String>,
    },
    /// Check that an experiment file parses and resolves.
    Validate { experiment: PathBuf },
    /// Print or save a generated application DAG.
    ExportDag {
        /// light_gbm, map_reduce_sort, video_analytics or matrix_compute.
        kind: String,
        #[arg(long, default_value_t = ibdash::workloads::DEFAULT_FANOUT)]
        fanout: u32,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { experiment, flags } => commands::cmd_run(&experiment, &flags.into()),
        Command::Sweep {
            experiment,
            param,
            range,
            flags,
        } => commands::cmd_sweep(&experiment, &param, &range, &flags.into()),
        Command::FitLambda {
            trace,
            write_fragment,
            class,
        } => {
            let fragment = write_fragment.as_deref().zip(class.as_deref());
            commands::cmd_fit_lambda(&trace, fragment)
        }
        Command::Validate { experiment } => commands::cmd_validate(&experiment),
        Command::ExportDag { kind, fanout, out } => commands::cmd_export_dag(&kind, fanout, out.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
