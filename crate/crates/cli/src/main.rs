//! `blb`: dataset generation, ground truth, and resampling-based quality
//! assessment from the command line.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand};

use config::{RunConfig, Usage};

#[derive(Debug, Parser)]
#[command(name = "blb", version, about = "Bag of Little Bootstraps and baseline resampling procedures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic dataset CSV.
    Gen(CmdArgs),
    /// Monte Carlo ground-truth quality of an estimator, as JSON.
    Truth(CmdArgs),
    /// Run one assessment method on a dataset.
    Assess(CmdArgs),
    /// Sweep subset-size exponents for a set of methods, one trace per pair.
    Bench(CmdArgs),
    /// Standard-deviation estimates of the rescaled mean of MA(4) series.
    Timeseries(CmdArgs),
}

#[derive(Debug, Args)]
struct CmdArgs {
    /// JSON file with the same keys as the flags; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    run: RunConfig,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Gen(_) => "gen",
            Command::Truth(_) => "truth",
            Command::Assess(_) => "assess",
            Command::Bench(_) => "bench",
            Command::Timeseries(_) => "timeseries",
        }
    }

    fn args(self) -> CmdArgs {
        match self {
            Command::Gen(a) | Command::Truth(a) | Command::Assess(a) | Command::Bench(a) | Command::Timeseries(a) => a,
        }
    }
}

fn resolve(args: CmdArgs) -> anyhow::Result<RunConfig> {
    match &args.config {
        Some(path) => Ok(args.run.or(RunConfig::from_json_file(path)?)),
        None => Ok(args.run),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let name = cli.command.name();
    let result = resolve(cli.command.args()).and_then(|cfg| match name {
        "gen" => commands::gen(cfg),
        "truth" => commands::truth(cfg),
        "assess" => commands::assess(cfg),
        "bench" => commands::bench(cfg),
        _ => commands::timeseries(cfg),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => match e.downcast_ref::<Usage>() {
            Some(u) => {
                let mut cmd = Cli::command();
                cmd.build();
                let sub = cmd.find_subcommand_mut(name).expect("known subcommand");
                sub.error(ErrorKind::InvalidValue, u).exit()
            }
            None => {
                eprintln!("error: {e:#}");
                ExitCode::FAILURE
            }
        },
    }
}
