//! `mfg-price`: benchmark runner for the price formation solver.

mod commands;
mod config;
mod error;
mod output;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mfg_price::training::TrainMode;

use crate::config::{Export, Overrides, RunConfig};
use crate::error::CliResult;
use crate::output::OUT_ROOT_ENV;

#[derive(Debug, Parser)]
#[command(name = "mfg-price", version = output::VERSION, about = "Mean-field-game price formation experiments")]
struct Cli {
    /// Root for run directories when --out is not given.
    #[arg(long, global = true, env = OUT_ROOT_ENV)]
    out_root: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Closed-form benchmark field, price and variational value.
    Oracle(Common),
    /// Train the recurrent network.
    Train {
        #[command(flatten)]
        common: Common,
        /// Continue from this checkpoint.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Evaluate a trained checkpoint.
    Eval {
        #[command(flatten)]
        common: Common,
        /// Checkpoint to evaluate (default: <out>/checkpoint.bin).
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Number of test supply paths (stochastic mode).
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        samples: Option<u64>,
    },
    /// Optimize the grid values of the potential directly.
    Tabular(Common),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    #[value(alias = "deterministic")]
    Det,
    #[value(alias = "stochastic")]
    Stoch,
}

#[derive(Debug, Args)]
struct Common {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Training (or tabular) steps.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    steps: Option<u64>,
    /// Training seed; the evaluation seed for `eval`.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Artifacts to write.
    #[arg(long, value_enum, value_delimiter = ',')]
    export: Option<Vec<Export>>,
}

impl Common {
    /// `steps` and `seed` are routed per command, so they are not applied here.
    fn load(&self, steps: Option<u64>, seed: Option<u64>) -> CliResult<RunConfig> {
        let overrides = Overrides {
            mode: self.mode.map(|m| match m {
                ModeArg::Det => TrainMode::Deterministic,
                ModeArg::Stoch => TrainMode::Stochastic,
            }),
            steps,
            seed,
            out: self.out.clone(),
            export: self.export.clone(),
        };
        RunConfig::load(self.config.as_deref(), &overrides)
    }
}

fn run(cli: Cli) -> CliResult<PathBuf> {
    let root = cli.out_root.as_deref();
    match cli.command {
        Command::Oracle(c) => commands::oracle(&c.load(c.steps, c.seed)?, root),
        Command::Train { common: c, resume } => {
            commands::train(&c.load(c.steps, c.seed)?, &commands::TrainOptions { resume }, root)
        }
        Command::Eval {
            common: c,
            checkpoint,
            samples,
        } => {
            let config = c.load(c.steps, None)?;
            let options = commands::EvalOptionsCli {
                checkpoint,
                samples: samples.map(|n| n as usize),
                seed: c.seed,
            };
            commands::eval(&config, &options, root)
        }
        Command::Tabular(c) => commands::tabular(&c.load(None, c.seed)?, c.steps, root),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(dir) => {
            println!("{}", dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
