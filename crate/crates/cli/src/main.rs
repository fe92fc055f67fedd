use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use regressgan::harness::{gen_data, report, run_ablation, run_experiment, CellOutcome, ExperimentConfig};

#[derive(Parser)]
#[command(name = "regressgan", version, about = "Conditional-GAN regression experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train and evaluate every (dataset, model, seed) cell of a config.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Compare the minimax and non-saturating generator objectives.
    Ablation {
        #[arg(long)]
        config: PathBuf,
    },
    /// Write a synthetic dataset to CSV.
    GenData {
        #[arg(long)]
        dataset: String,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rebuild the results table from a run directory's metrics.csv.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Command::Run { config } => sweep(&config, false),
        Command::Ablation { config } => sweep(&config, true),
        Command::GenData { dataset, n, seed, out } => {
            let ds = gen_data(&dataset, n, seed, &out)?;
            eprintln!("wrote {} rows × {} features to {}", ds.n_rows(), ds.n_features(), out.display());
            Ok(true)
        }
        Command::Report { input } => {
            let table = report(&input)?;
            print!("{}", table.to_text());
            Ok(true)
        }
    }
}

fn sweep(path: &std::path::Path, ablation: bool) -> anyhow::Result<bool> {
    let cfg = ExperimentConfig::load(path).with_context(|| format!("loading {}", path.display()))?;
    let result = if ablation { run_ablation(&cfg)? } else { run_experiment(&cfg)? };
    print!("{}", result.table.to_text());
    let mut ok = true;
    for cell in &result.cells {
        if let CellOutcome::Failed(msg) = &cell.outcome {
            eprintln!("{} failed: {msg}", cell.id.label());
            ok = false;
        }
    }
    eprintln!("outputs in {}", cfg.output_dir.display());
    Ok(ok)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
