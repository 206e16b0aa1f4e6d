use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use rbm_lattice::experiment::{self, ExperimentConfig, RunStatus};

/// Reflecting random walks on cube-complex lattice approximations.
#[derive(Parser)]
#[command(name = "rbm-lattice", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every experiment in a config and write reports plus manifest.json.
    Run {
        config: PathBuf,
        /// Output directory, overriding the config's outputDir.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Print one line per (experiment, level).
        #[arg(short, long)]
        verbose: bool,
    },
    /// Check a config and print it with defaults filled in.
    Validate { config: PathBuf },
    /// List built-in domains, test functions and experiments.
    Builtins {
        #[arg(long)]
        json: bool,
    },
}

const CONFIG_ERROR: u8 = 2;
const RUNTIME_FAILURE: u8 = 1;

fn load(path: &Path) -> Result<ExperimentConfig, ExitCode> {
    let raw = match fs::read_to_string(path) {
        Ok(raw) => raw,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", path.display());
            return Err(ExitCode::from(CONFIG_ERROR));
        }
    };
    experiment::validate_config(&raw).map_err(|errors| {
        eprintln!("error: {} has {} problem(s):", path.display(), errors.len());
        for e in errors {
            eprintln!("  {e}");
        }
        ExitCode::from(CONFIG_ERROR)
    })
}

fn run(config: &Path, output: Option<PathBuf>, verbose: bool) -> Result<ExitCode, ExitCode> {
    let cfg = load(config)?;
    let dir = output.unwrap_or_else(|| PathBuf::from(&cfg.output_dir));
    let manifest = experiment::run_experiment_in(&cfg, &dir)
        .with_context(|| format!("running {}", config.display()))
        .map_err(|e| {
            eprintln!("error: {e:#}");
            ExitCode::from(RUNTIME_FAILURE)
        })?;
    for r in &manifest.runs {
        let failed = r.status == RunStatus::Failed;
        if verbose || failed || r.status == RunStatus::EmptyGrid {
            let line = format!(
                "{} k={}: {:?}{}",
                r.experiment.name(),
                r.level,
                r.status,
                r.message.as_deref().map(|m| format!(" ({m})")).unwrap_or_default()
            );
            if failed {
                eprintln!("{line}");
            } else {
                println!("{line}");
            }
        }
    }
    println!(
        "wrote {} file(s) and manifest.json to {}",
        manifest.files.len(),
        dir.display()
    );
    if manifest.failures() > 0 {
        return Err(ExitCode::from(RUNTIME_FAILURE));
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            output,
            verbose,
        } => run(&config, output, verbose),
        Command::Validate { config } => load(&config).map(|cfg| {
            print!("{}", cfg.pretty_json());
            ExitCode::SUCCESS
        }),
        Command::Builtins { json } => {
            if json {
                print!("{}", experiment::list_builtins_json());
            } else {
                print!("{}", experiment::list_builtins());
            }
            Ok(ExitCode::SUCCESS)
        }
    };
    result.unwrap_or_else(|code| code)
}
