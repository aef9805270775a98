use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use whitham_lab::{load_config, run, Command};

/// Pseudospectral experiments for Whitham-type equations.
#[derive(Parser)]
#[command(name = "whitham-lab", version)]
struct Args {
    /// solve-tw, sweep-branch, evolve, sweep-critical-times, compare-kdv,
    /// fit-spectrum or stability-map
    command: Command,
    /// Configuration file, or `preset:NAME` for a shipped preset
    #[arg(long)]
    config: String,
    /// Output directory (overrides `[output] dir`)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override a key, e.g. `--set grid.n=4096`
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let result = load_config(args.command, &args.config, &args.set).and_then(|mut cfg| {
        if let Some(out) = args.out {
            cfg.out_dir = out;
        }
        run(&cfg)
    });
    match result {
        Ok(manifest) => {
            println!("{}", manifest.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("whitham-lab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
