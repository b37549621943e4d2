use std::path::PathBuf;
use std::process::ExitCode;

use bloomlab::config::{Experiment, ExperimentConfig};
use bloomlab::experiments::{run, write_output};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bloomlab", version, about = "Two-weight commutator experiments")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    BloomUpper(Flags),
    BloomFailure(Flags),
    Embedding(Flags),
    Necessity(Flags),
    Decompose(Flags),
    DiagnoseWeight(Flags),
}

#[derive(clap::Args)]
struct Flags {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, flags) = match cli.verb {
        Verb::BloomUpper(f) => (Experiment::BloomUpper, f),
        Verb::BloomFailure(f) => (Experiment::BloomFailure, f),
        Verb::Embedding(f) => (Experiment::Embedding, f),
        Verb::Necessity(f) => (Experiment::Necessity, f),
        Verb::Decompose(f) => (Experiment::Decompose, f),
        Verb::DiagnoseWeight(f) => (Experiment::DiagnoseWeight, f),
    };
    match execute(experiment, flags) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn execute(experiment: Experiment, flags: Flags) -> anyhow::Result<bool> {
    let mut config = match flags.config {
        Some(path) => ExperimentConfig::load(&path, Some(experiment))?,
        None => ExperimentConfig::defaults(experiment),
    };
    if let Some(seed) = flags.seed {
        config.seed = seed;
    }
    if let Some(t) = flags.threads {
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global()?;
    }
    let out = run(&config)?;
    let dir = flags.out;
    write_output(&dir, &config, &out)?;
    for c in &out.checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    println!("wrote {}", dir.display());
    Ok(out.passed())
}
