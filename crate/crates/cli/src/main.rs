use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fiberchan_cli::config::{resolve_seed, ExperimentConfig};
use fiberchan_cli::error::{CliError, Result};
use fiberchan_cli::{reproduce, run_experiment, run_reproduce, with_jobs, Command};

#[derive(Parser)]
#[command(name = "fiberchan", version, about = "Noisy fiber channel experiments")]
struct Cli {
    /// Seed; overrides the config and FIBERCHAN_SEED.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; overrides the config's `out`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for scans, restarts and bootstrap sets.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Characterize one fiber.
    Fiber { config: Option<PathBuf> },
    /// Interferometer, tomography, capacity and error bars.
    Pipeline { config: Option<PathBuf> },
    /// Entangled inputs and the CHSH test.
    Chsh { config: Option<PathBuf> },
    /// Any mode named by the config document.
    Run { config: PathBuf },
    /// All headline checks at desk scale.
    Reproduce,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match with_jobs(cli.jobs, || dispatch(&cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<()> {
    let (cmd, path) = match &cli.cmd {
        Cmd::Fiber { config } => (Command::Fiber, config.clone()),
        Cmd::Pipeline { config } => (Command::Pipeline, config.clone()),
        Cmd::Chsh { config } => (Command::Chsh, config.clone()),
        Cmd::Run { config } => (Command::Run, Some(config.clone())),
        Cmd::Reproduce => {
            let seed = resolve_seed(cli.seed, &ExperimentConfig::default())?;
            let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("reproduce-out"));
            let (_, report) = run_reproduce(seed, &out)?;
            print!("{}", reproduce::format_table(&report));
            println!("wrote {}", out.join("manifest.json").display());
            return Ok(());
        }
    };
    let cfg = match &path {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    let seed = resolve_seed(cli.seed, &cfg)?;
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.out.clone())
        .ok_or_else(|| CliError::config("out", "no output directory: pass --out or set `out`"))?;
    let manifest = run_experiment(cmd, &cfg, seed, &out)?;
    for name in manifest.artifacts.keys() {
        println!("{}", out.join(name).display());
    }
    println!("{}", out.join("manifest.json").display());
    Ok(())
}
