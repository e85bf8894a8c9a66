//! Stand-alone tomography, capacity and bootstrap runs on one channel.

use fiberchan::capacity::{dephasing_capacity_oracle, q1_scan, CapacitySummary};
use fiberchan::channel::ChiMatrix;
use fiberchan::stats::{bootstrap_many, BootstrapConfig, EstimateWithError};
use fiberchan::tomography::{process_fidelity, reconstruct_ml, simulate_counts, CountsTable, MlOptions};
use serde::Serialize;

use crate::config::{derive_seed, ChannelKind, Settings};
use crate::error::{CliError, Result, StageExt};
use crate::output::OutDir;

const TAG_COUNTS: u64 = 1;
const TAG_BOOTSTRAP: u64 = 2;
const TAG_ML: u64 = 10;

fn ml_options(s: &Settings) -> MlOptions {
    MlOptions {
        restarts: s.restarts,
        seed: derive_seed(s.seed, TAG_ML),
        ..MlOptions::default()
    }
}

/// Counts from the `counts` file, else simulated from `channel`. Returns the
/// reference channel when one was given.
fn load_counts(s: &Settings, has_channel: bool) -> Result<(CountsTable, Option<ChiMatrix>)> {
    let reference = if has_channel { Some(s.build_channel()?) } else { None };
    let table = match (&s.counts, &reference) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            CountsTable::from_csv(&text).map_err(|e| CliError::config(format!("counts ({})", path.display()), e))?
        }
        (None, Some(chi)) => simulate_counts(chi, s.shots, derive_seed(s.seed, TAG_COUNTS)).stage("count simulation")?,
        (None, None) => return Err(CliError::config("counts", "no counts file and no channel")),
    };
    Ok((table, reference))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TomoReport {
    pub cost: f64,
    pub iterations: usize,
    pub converged: bool,
    pub restart: usize,
    /// Against the configured channel, when there is one.
    pub fidelity: Option<f64>,
}

pub fn tomo(s: &Settings, has_channel: bool, out: &mut OutDir) -> Result<TomoReport> {
    let (table, reference) = load_counts(s, has_channel)?;
    out.write("counts.csv", table.to_csv().as_bytes())?;
    let rec = reconstruct_ml(&table, &ml_options(s)).stage("reconstruction")?;
    rec.chi.require_channel().stage("reconstruction")?;
    out.write_json("reconstructed.json", &rec)?;
    let fidelity = match &reference {
        Some(chi) => Some(process_fidelity(&rec.chi, chi).stage("fidelity")?),
        None => None,
    };
    let report = TomoReport {
        cost: rec.cost,
        iterations: rec.iterations,
        converged: rec.converged,
        restart: rec.restart,
        fidelity,
    };
    out.write_json("tomo_report.json", &report)?;
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CapacityReport {
    pub capacity: CapacitySummary,
    /// `1 − H₂((1 − |γ|)/2)` for dephasing channels.
    pub oracle: Option<f64>,
}

pub fn capacity(s: &Settings, out: &mut OutDir) -> Result<CapacityReport> {
    let chi = s.build_channel()?;
    out.write_json("channel.json", &chi)?;
    let cap = q1_scan(&chi, &s.grid, s.keep_surface).stage("capacity")?;
    if let Some(surface) = cap.surface_csv() {
        out.write("capacity_surface.csv", surface.as_bytes())?;
    }
    let oracle = match (s.channel.kind, s.channel.gamma) {
        (ChannelKind::Dephasing, Some(g)) => Some(dephasing_capacity_oracle(g.abs()).stage("capacity")?),
        _ => None,
    };
    let report = CapacityReport {
        capacity: cap.summary(),
        oracle,
    };
    out.write_json("capacity.json", &report)?;
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BootstrapReport {
    /// Reconstruction against the configured channel, or the identity.
    pub fidelity: EstimateWithError,
    /// `Q₁` of the reconstruction on the bootstrap grid.
    pub q1: EstimateWithError,
}

pub fn bootstrap(s: &Settings, has_channel: bool, out: &mut OutDir) -> Result<BootstrapReport> {
    let (table, reference) = load_counts(s, has_channel)?;
    out.write("counts.csv", table.to_csv().as_bytes())?;
    let reference = reference.unwrap_or_else(ChiMatrix::identity);
    let opts = ml_options(s);
    let grid = s.bootstrap_grid;
    let estimator = |cells: &[f64]| -> fiberchan::Result<Vec<f64>> {
        let rec = reconstruct_ml(&table.with_flat(cells)?, &opts)?;
        Ok(vec![process_fidelity(&rec.chi, &reference)?, q1_scan(&rec.chi, &grid, false)?.q1])
    };
    let cfg = BootstrapConfig::new(s.bootstrap_sets, derive_seed(s.seed, TAG_BOOTSTRAP)).stage("bootstrap")?;
    let est = bootstrap_many(&table.flat(), estimator, &cfg).stage("bootstrap")?;
    let report = BootstrapReport {
        fidelity: est[0],
        q1: est[1],
    };
    out.write_json("bootstrap.json", &report)?;
    Ok(report)
}
