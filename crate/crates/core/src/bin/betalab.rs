use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::error;

use betalab::cli::{self, ExperimentConfig, RunOptions};
use betalab::Error;

#[derive(Parser)]
#[command(name = "betalab", version, about = "Numerical experiments for β-ensembles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for the equilibrium measure.
    Eqm(Common),
    /// Draw sample archives for every (N, seed).
    Sample(Common),
    /// Compute diagnostics from existing archives.
    Diagnose(Common),
    /// Run eqm, sample and diagnose in sequence.
    Scaling(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output directory; overrides the config's `output`.
    #[arg(long, value_name = "DIR", env = "BETALAB_OUT")]
    out: Option<PathBuf>,
    #[arg(long, value_name = "INT", default_value_t = 0)]
    seed_offset: u64,
    /// Use the tridiagonal sampler when the model allows it.
    #[arg(long)]
    exact: bool,
    #[arg(long, value_name = "INT")]
    threads: Option<usize>,
}

fn run(cmd: Command) -> Result<(), Error> {
    let (Command::Eqm(c) | Command::Sample(c) | Command::Diagnose(c) | Command::Scaling(c)) = &cmd;
    let cfg = ExperimentConfig::load(&c.config)?;
    let out = c
        .out
        .clone()
        .or_else(|| cfg.output.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("betalab-out"));
    let opts = RunOptions {
        out,
        seed_offset: c.seed_offset,
        exact: c.exact,
        threads: c.threads,
    };
    match cmd {
        Command::Eqm(_) => print_json(&cli::cmd_eqm(&cfg, &opts)?),
        Command::Sample(_) => print_json(&cli::cmd_sample(&cfg, &opts)?),
        Command::Diagnose(_) => print_json(&cli::cmd_diagnose(&cfg, &opts)?.scaling),
        Command::Scaling(_) => print_json(&cli::cmd_scaling(&cfg, &opts)?.scaling),
    }
    Ok(())
}

fn print_json<T: serde::Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).unwrap_or_default());
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = Cli::parse();
    match run(args.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            ExitCode::from(cli::exit_code(&e) as u8)
        }
    }
}
