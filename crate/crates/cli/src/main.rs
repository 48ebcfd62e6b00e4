use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qwalk_cli::{run_experiment, validate_with, ExperimentConfig, ExperimentKind, Overrides};

/// Coined quantum walk experiments.
#[derive(Parser)]
#[command(name = "qwalk", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config.
    Run {
        config: PathBuf,
        #[command(flatten)]
        overrides: Flags,
    },
    /// Check a config and print it with defaults filled in.
    Validate {
        config: PathBuf,
        #[command(flatten)]
        overrides: Flags,
    },
    /// List the available experiment kinds.
    ListExperiments,
}

#[derive(Args)]
struct Flags {
    /// Master seed, replacing `seed` in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads, replacing `workers` in the config.
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory, replacing `out` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl From<Flags> for Overrides {
    fn from(f: Flags) -> Self {
        Overrides { seed: f.seed, workers: f.workers, out: f.out }
    }
}

const VALIDATION_FAILURE: u8 = 2;

fn load(path: &Path, flags: Flags) -> Result<ExperimentConfig, ExitCode> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", path.display());
        ExitCode::FAILURE
    })?;
    validate_with(&text, &flags.into()).map_err(|errs| {
        eprintln!("invalid config {}:", path.display());
        for e in &errs.0 {
            eprintln!("  {e}");
        }
        ExitCode::from(VALIDATION_FAILURE)
    })
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::ListExperiments => {
            for k in ExperimentKind::ALL {
                println!("{:<22}{}", k.name(), k.description());
            }
            ExitCode::SUCCESS
        }
        Command::Validate { config, overrides } => match load(&config, overrides) {
            Ok(cfg) => match toml::to_string(&cfg) {
                Ok(text) => {
                    print!("{text}");
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::FAILURE
                }
            },
            Err(code) => code,
        },
        Command::Run { config, overrides } => {
            let cfg = match load(&config, overrides) {
                Ok(cfg) => cfg,
                Err(code) => return code,
            };
            match run_experiment(&cfg) {
                Ok(outcome) => {
                    println!("{}", serde_json::to_string_pretty(&outcome.summary).unwrap_or_default());
                    eprintln!("wrote {}", outcome.dir.display());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::FAILURE
                }
            }
        }
    }
}
