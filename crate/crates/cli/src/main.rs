//! `dbar`: run one experiment described by a TOML file.

mod commands;
mod config;
mod error;
mod init;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use commands::Outcome;
use config::{Command, RunConfig};
use error::CliError;
use output::Output;

#[derive(Debug, Parser)]
#[command(name = "dbar", version, about = "Discrete holomorphic-energy flows and related experiments")]
struct Args {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Directory for output files (created if missing).
    #[arg(long, default_value = "out")]
    output: PathBuf,
    /// Overrides `run.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Only errors go to stderr; nothing to stdout.
    #[arg(long)]
    quiet: bool,
}

fn run(args: &Args) -> Result<Outcome, CliError> {
    let mut cfg = RunConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.run.seed = seed;
    }
    let out = Output::new(&args.output, &cfg)?;
    match cfg.run.command {
        Command::Flow => commands::flow::cmd_flow(&cfg, &out, args.quiet),
        Command::Frames => commands::frames::cmd_frames(&cfg, &out, args.quiet),
        Command::Basin => commands::frames::cmd_basin(&cfg, &out, args.quiet),
        Command::Spectrum => commands::spectrum::cmd_spectrum(&cfg, &out, args.quiet),
        Command::Verify => commands::verify::cmd_verify(&cfg, &out, args.quiet),
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(outcome) => ExitCode::from(outcome.exit_code() as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
