//! Reproducible experiments on noisy fiber channels: JSON config in, CSV and
//! JSON artifacts plus a hash manifest out.

// `!(x > 0.0)` rejects NaN on purpose; index loops mirror the matrix notation
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analysis;
pub mod chsh;
pub mod config;
pub mod error;
pub mod fiber;
pub mod output;
pub mod pipeline;
pub mod reproduce;

use std::path::Path;

use config::{ExperimentConfig, Mode, Settings};
use error::{CliError, Result};
use output::{Manifest, OutDir};

/// Which modes a subcommand accepts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Fiber,
    Pipeline,
    Chsh,
    Run,
}

impl Command {
    pub fn accepts(self, mode: Mode) -> bool {
        match self {
            Command::Fiber => mode == Mode::Fiber,
            Command::Pipeline => mode.network().is_some(),
            Command::Chsh => mode == Mode::Chsh,
            Command::Run => true,
        }
    }

    /// Mode used when the config document names none.
    pub fn default_mode(self) -> Option<Mode> {
        match self {
            Command::Fiber => Some(Mode::Fiber),
            Command::Pipeline => Some(Mode::Unidir),
            Command::Chsh => Some(Mode::Chsh),
            Command::Run => None,
        }
    }
}

/// Runs one experiment and writes its artifacts and manifest under `out`.
pub fn run_experiment(cmd: Command, cfg: &ExperimentConfig, seed: u64, out: &Path) -> Result<Manifest> {
    let mut cfg = cfg.clone();
    if cfg.mode.is_none() {
        cfg.mode = cmd.default_mode();
    }
    let settings = cfg.resolve(seed)?;
    if !cmd.accepts(settings.mode) {
        return Err(CliError::config(
            "mode",
            format!("mode {:?} cannot be run by the {cmd:?} command", settings.mode.name()),
        ));
    }
    let mut dir = OutDir::create(out)?;
    dir.write_json("settings.json", &settings)?;
    execute(&settings, cfg.channel.is_some(), &mut dir)?;
    dir.finish(settings.mode.name(), seed)
}

fn execute(s: &Settings, has_channel: bool, out: &mut OutDir) -> Result<()> {
    match s.mode {
        Mode::Fiber => fiber::run(s, out).map(drop),
        Mode::Unidir | Mode::BidirAb | Mode::BidirBa => {
            pipeline::run(s, s.mode.network().expect("network mode"), out).map(drop)
        }
        Mode::Tomo => analysis::tomo(s, has_channel, out).map(drop),
        Mode::Capacity => analysis::capacity(s, out).map(drop),
        Mode::Chsh => chsh::run(s, out).map(drop),
        Mode::Bootstrap => analysis::bootstrap(s, has_channel, out).map(drop),
    }
}

/// The bundled acceptance runs; returns the manifest and the check table.
pub fn run_reproduce(seed: u64, out: &Path) -> Result<(Manifest, reproduce::ReproduceReport)> {
    let mut dir = OutDir::create(out)?;
    let report = reproduce::run(seed, &mut dir)?;
    Ok((dir.finish("reproduce", seed)?, report))
}

/// Runs `f` on a pool of `jobs` workers (all cores when `None`).
pub fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        b = b.num_threads(n.max(1));
    }
    b.build().expect("thread pool").install(f)
}
