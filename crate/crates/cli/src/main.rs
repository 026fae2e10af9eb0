//! Command-line entry point: train / eval / flops / bench.

use clap::{Parser, Subcommand, ValueEnum};
use ffcl_cli::config::RunConfig;
use ffcl_cli::error::{CliError, Result};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "ffcl",
    version,
    about = "Forward-forward learning toolkit: train, evaluate and cost three \
             backpropagation-free variants (ffl, ffdl, ffcl)"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Run configuration (TOML).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Override one config key, e.g. --set epochs_per_layer=5 or
    /// --set model.theta=1.0 (repeatable).
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,

    /// Override the training seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Compute precision.
    #[arg(long, global = true, value_enum, default_value_t = Precision::P32)]
    precision: Precision,

    /// Override the output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Precision {
    #[value(name = "32")]
    P32,
    #[value(name = "64")]
    P64,
}

#[derive(Subcommand)]
enum Command {
    /// Train a network and write a checkpoint plus training metrics.
    Train,
    /// Evaluate a checkpoint: per-layer and model accuracy.
    Eval {
        #[arg(long, value_name = "PATH")]
        checkpoint: PathBuf,
        /// Dataset split to evaluate.
        #[arg(long, default_value = "test")]
        split: String,
    },
    /// Print and save the analytic inference cost of all three variants.
    Flops {
        /// Also run the instrumented counter and compare per layer.
        #[arg(long)]
        check_instrumented: bool,
        /// Take the published first-layer figure as given.
        #[arg(long)]
        table_compat: bool,
    },
    /// Train with several seeds and summarize accuracy statistics.
    Bench {
        #[arg(long)]
        repetitions: Option<usize>,
        /// Run repetitions on parallel threads.
        #[arg(long)]
        parallel: bool,
    },
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config is required".into()))?;
    let mut cfg = RunConfig::load(path, &cli.set)?;
    if let Some(seed) = cli.seed {
        cfg.train.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output.dir = out.to_string_lossy().into_owned();
    }
    Ok(cfg)
}

fn dispatch(cli: &Cli) -> Result<()> {
    let cfg = load_config(cli)?;
    match (&cli.command, cli.precision) {
        (Command::Train, Precision::P32) => ffcl_cli::commands::train::run::<f32>(&cfg).map(drop),
        (Command::Train, Precision::P64) => ffcl_cli::commands::train::run::<f64>(&cfg).map(drop),
        (Command::Eval { checkpoint, split }, Precision::P32) => {
            ffcl_cli::commands::eval::run::<f32>(&cfg, checkpoint, split).map(drop)
        }
        (Command::Eval { checkpoint, split }, Precision::P64) => {
            ffcl_cli::commands::eval::run::<f64>(&cfg, checkpoint, split).map(drop)
        }
        (
            Command::Flops {
                check_instrumented,
                table_compat,
            },
            Precision::P32,
        ) => ffcl_cli::commands::flops::run::<f32>(&cfg, *check_instrumented, *table_compat),
        (
            Command::Flops {
                check_instrumented,
                table_compat,
            },
            Precision::P64,
        ) => ffcl_cli::commands::flops::run::<f64>(&cfg, *check_instrumented, *table_compat),
        (
            Command::Bench {
                repetitions,
                parallel,
            },
            Precision::P32,
        ) => ffcl_cli::commands::bench::run::<f32>(&cfg, *repetitions, *parallel).map(drop),
        (
            Command::Bench {
                repetitions,
                parallel,
            },
            Precision::P64,
        ) => ffcl_cli::commands::bench::run::<f64>(&cfg, *repetitions, *parallel).map(drop),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = dispatch(&cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
