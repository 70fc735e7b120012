//! `hybrid-audit`: preparation, the two detection procedures, synthetic
//! benchmarks and their evaluation, each driven by one TOML file.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error, 4 quality
//! gate failed.

mod commands;
mod config;
mod failure;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::Loaded;
use crate::failure::Failure;

#[derive(Debug, Parser)]
#[command(
    name = "hybrid-audit",
    version,
    about = "Anomaly screening for mixed numeric and nominal tables"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct Common {
    /// TOML configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` in the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Replaces every seed in the configuration.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Select attributes, convert valuations and areas, label declared values.
    Prepare(Common),
    /// Per-bin LOF screening against a nominal target.
    Proc1(Common),
    /// Detector vote, classifier refinement and attribute ranking.
    Proc2(Common),
    /// Generate a synthetic table with injected anomalies.
    Synth(Common),
    /// Score a proc1/proc2 report against ground truth.
    Eval(Common),
}

fn run(cli: Cli) -> Result<commands::Outcome, Failure> {
    let (args, cmd): (&Common, fn(&Loaded, &std::path::Path) -> _) = match &cli.command {
        Command::Prepare(a) => (a, commands::prepare),
        Command::Proc1(a) => (a, commands::proc1),
        Command::Proc2(a) => (a, commands::proc2),
        Command::Synth(a) => (a, commands::synth),
        Command::Eval(a) => (a, commands::eval),
    };
    let loaded = Loaded::read(&args.config, args.seed)?;
    let out = loaded.output_dir(args.out.as_deref());
    cmd(&loaded, &out)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(outcome) => {
            match &outcome.stdout {
                Some(s) => print!("{s}"),
                None => {
                    for f in &outcome.files {
                        println!("{}", f.display());
                    }
                }
            }
            match outcome.gate {
                Some(g) => {
                    eprintln!("hybrid-audit: {g}");
                    g.exit_code()
                }
                None => ExitCode::SUCCESS,
            }
        }
        Err(e) => {
            eprintln!("hybrid-audit: {e}");
            e.exit_code()
        }
    }
}
