use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use synapse_sync::{run, CliError, ExperimentConfig, Mode};

/// Simulate and analyze excitable oscillator networks under weak
/// synaptic coupling.
#[derive(Debug, Parser)]
#[command(name = "synapse-sync", version)]
struct Args {
    mode: Mode,
    /// JSON experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let result = ExperimentConfig::from_path(&args.config).and_then(|mut cfg| {
        if let Some(seed) = args.seed {
            cfg.seed = seed;
        }
        run(&cfg, args.mode, &args.out)
    });
    match result {
        Ok(summary) => {
            for f in &summary.files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &CliError) -> u8 {
    e.exit_code() as u8
}
