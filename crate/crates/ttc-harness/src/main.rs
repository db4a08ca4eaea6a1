//! `ttc` — run test-time compute scaling experiments from a TOML config.
//!
//! Exit codes: 0 on success, 2 for configuration problems (unparseable or
//! invalid config, wrong verb for the config), 3 for runtime failures
//! (dataset or ledger corruption, backend errors, IO).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ttc_harness::config::{ConfigError, ExperimentConfig};
use ttc_harness::runner::{Pipeline, RunError};

#[derive(Parser)]
#[command(
    name = "ttc",
    version,
    about = "Test-time compute scaling experiments: verifier-guided search, \
             revision chains, and compute-optimal strategy selection"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline: sweep, difficulty, policies, flops, plots.
    Run {
        /// Path to the experiment TOML config.
        #[arg(long)]
        config: PathBuf,
    },
    /// Run (or resume) the strategy-by-budget sweep and write results.csv.
    Sweep {
        #[arg(long)]
        config: PathBuf,
    },
    /// Assess question difficulty under both modes and write difficulty.csv.
    Difficulty {
        #[arg(long)]
        config: PathBuf,
    },
    /// Select compute-optimal strategies per difficulty bin and budget.
    Policy {
        #[arg(long)]
        config: PathBuf,
    },
    /// Report the pretraining-vs-inference FLOPs exchange table.
    Flops {
        #[arg(long)]
        config: PathBuf,
    },
    /// Write the tidy CSV files behind every figure.
    EmitPlots {
        #[arg(long)]
        config: PathBuf,
    },
    /// Parse and validate a config without running anything.
    ValidateConfig {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Run(#[from] RunError),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Usage(_) => 2,
            CliError::Run(RunError::Config(_)) => 2,
            CliError::Run(_) => 3,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("error: {error}");
            ExitCode::from(error.exit_code())
        }
    }
}

fn open(config_path: &Path) -> Result<Pipeline, CliError> {
    let (config, hash) = ExperimentConfig::load(config_path)?;
    Ok(Pipeline::new(config, hash)?)
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::ValidateConfig { config } => {
            let (parsed, hash) = ExperimentConfig::load(&config)?;
            let settings = parsed.sweep_settings()?;
            println!("config OK: hash {hash}");
            println!(
                "  {} strategies x {} budgets x {} seeds",
                settings.len(),
                parsed.sweep.budgets.len(),
                parsed.sweep.seeds.len()
            );
            Ok(())
        }
        Command::Run { config } => {
            let pipeline = open(&config)?;
            let summary = pipeline.run_all()?;
            println!(
                "run complete: {} cells ({} run, {} from ledger)",
                summary.cells_total, summary.cells_run, summary.ledger_hits
            );
            println!("  config hash {}", summary.config_hash);
            println!(
                "  artifacts in {}: {}",
                pipeline.out_dir.display(),
                summary
                    .artifacts
                    .values()
                    .cloned()
                    .collect::<Vec<_>>()
                    .join(", ")
            );
            Ok(())
        }
        Command::Sweep { config } => {
            let pipeline = open(&config)?;
            let (table, stats) = pipeline.sweep()?;
            println!(
                "sweep complete: {} cells ({} run, {} from ledger), {} records",
                stats.cells_total,
                stats.cells_run,
                stats.ledger_hits,
                table.len()
            );
            println!("  wrote {}", pipeline.out_dir.join("results.csv").display());
            Ok(())
        }
        Command::Difficulty { config } => {
            let pipeline = open(&config)?;
            let assessments = pipeline.assess()?;
            for (label, list) in [
                ("oracle", &assessments.oracle),
                ("predicted", &assessments.predicted),
            ] {
                let mut sizes: BTreeMap<u8, usize> = BTreeMap::new();
                for a in list {
                    *sizes.entry(a.bin).or_default() += 1;
                }
                let sizes: Vec<String> = sizes
                    .iter()
                    .map(|(bin, n)| format!("bin {bin}: {n}"))
                    .collect();
                println!("{label}: {}", sizes.join(", "));
            }
            println!(
                "  wrote {}",
                pipeline.out_dir.join("difficulty.csv").display()
            );
            Ok(())
        }
        Command::Policy { config } => {
            let pipeline = open(&config)?;
            let (table, _) = pipeline.sweep()?;
            let assessments = pipeline.assess()?;
            let (oracle, predicted) = pipeline.policies(&table, &assessments)?;
            for (label, policy) in [("oracle", &oracle), ("predicted", &predicted)] {
                for entry in &policy.entries {
                    println!(
                        "{label} bin {} budget {}: {} (holdout {:.4})",
                        entry.bin, entry.budget, entry.strategy, entry.holdout_accuracy
                    );
                }
            }
            println!(
                "  wrote {} and {}",
                pipeline.out_dir.join("policy_oracle.json").display(),
                pipeline.out_dir.join("policy_predicted.json").display()
            );
            Ok(())
        }
        Command::Flops { config } => {
            let pipeline = open(&config)?;
            if pipeline.config.flops.is_none() {
                return Err(CliError::Usage(
                    "flops verb needs a [flops] section in the config".into(),
                ));
            }
            let (table, _) = pipeline.sweep()?;
            let assessments = pipeline.assess()?;
            let (oracle, predicted) = pipeline.policies(&table, &assessments)?;
            let exchange = pipeline
                .exchange(&table, &assessments, &oracle, &predicted)?
                .expect("flops section present");
            for row in &exchange.rows {
                println!(
                    "bin {} R={}: F={:.4}, matched budget {:.2}, \
                     small model {:.4} vs reference {:.4} -> {}",
                    row.bin,
                    row.r,
                    row.m,
                    row.matched_budget,
                    row.small_model_accuracy,
                    row.reference_accuracy,
                    row.verdict
                );
            }
            Ok(())
        }
        Command::EmitPlots { config } => {
            let pipeline = open(&config)?;
            let summary = pipeline.run_all()?;
            let plots: Vec<&String> = summary
                .artifacts
                .iter()
                .filter(|(label, _)| label.starts_with("plot_"))
                .map(|(_, path)| path)
                .collect();
            for path in plots {
                println!("wrote {}", pipeline.out_dir.join(path).display());
            }
            Ok(())
        }
    }
}
