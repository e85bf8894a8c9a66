//! Interferometer → per-port tomography → mean channel → capacity.

use fiberchan::capacity::{q1_scan, CapacitySummary, ScanGrid};
use fiberchan::channel::{mix_channels, trace_preserving_completion, ChiMatrix};
use fiberchan::interferometer::{NetworkMode, PortChannels, PortOutcome};
use fiberchan::qstate::CMatrix;
use fiberchan::stats::{bootstrap_many, BootstrapConfig, EstimateWithError};
use fiberchan::tomography::{
    probes, process_fidelity, reconstruct_ml, simulate_raw_counts, CountsTable, MlOptions,
    ReconstructedProcess, PROBE_LABELS,
};
use serde::Serialize;

use crate::config::{derive_seed, Settings};
use crate::error::{Result, StageExt};
use crate::output::{csv, num, OutDir};

const TAG_COUNTS: u64 = 1;
const TAG_BOOTSTRAP: u64 = 2;
const TAG_ML: u64 = 10;
const TAG_MODE: u64 = 1000;

/// Estimate of the merged-port channel from the two port tables.
#[derive(Clone, Debug)]
pub struct MeanChannel {
    pub chi: ChiMatrix,
    /// Port weights estimated from the count totals.
    pub weights: [f64; 2],
    pub ports: [Option<ReconstructedProcess>; 2],
}

/// Reconstructs each port from its self-normalized table and mixes the
/// results with weights proportional to the port count rates.
pub fn mean_channel(tables: &[[[f64; 4]; 4]; 2], opts: [MlOptions; 2]) -> fiberchan::Result<MeanChannel> {
    let mut rates = [0.0; 2];
    let mut ports = [None, None];
    for k in 0..2 {
        let c = &tables[k];
        rates[k] = 0.5 * (c[0][0] + c[0][1] + c[1][0] + c[1][1]);
        if rates[k] > 0.0 {
            let t = CountsTable::self_normalized(*c, None)?;
            ports[k] = Some(reconstruct_ml(&t, &opts[k])?);
        }
    }
    let total = rates[0] + rates[1];
    if !(total > 0.0) {
        return Err(fiberchan::Error::InvalidParameter("both ports recorded zero counts".into()));
    }
    let weights = [rates[0] / total, rates[1] / total];
    let parts: Vec<(f64, ChiMatrix)> = (0..2)
        .filter_map(|k| ports[k].as_ref().map(|r| (weights[k], r.chi.clone())))
        .collect();
    let chi = trace_preserving_completion(&mix_channels(&parts)?)?;
    Ok(MeanChannel { chi, weights, ports })
}

fn split_cells(cells: &[f64]) -> [[[f64; 4]; 4]; 2] {
    std::array::from_fn(|k| std::array::from_fn(|i| std::array::from_fn(|j| cells[16 * k + 4 * i + j])))
}

#[derive(Clone, Debug, Serialize)]
struct ProbeOutcomes {
    input: &'static str,
    outcomes: Vec<PortOutcome>,
}

#[derive(Clone, Debug, Serialize)]
struct PortChannelsDoc<'a> {
    probabilities: [f64; 2],
    port0: Option<&'a ChiMatrix>,
    port1: Option<&'a ChiMatrix>,
    combined: &'a ChiMatrix,
}

#[derive(Clone, Debug, Serialize)]
struct MeanChannelDoc<'a> {
    weights: [f64; 2],
    chi: &'a ChiMatrix,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PipelineReport {
    pub mode: NetworkMode,
    pub port_probabilities: [f64; 2],
    pub estimated_weights: [f64; 2],
    /// Reconstructed port channel against the simulated one.
    pub port_fidelities: [Option<f64>; 2],
    pub fidelity_identity: EstimateWithError,
    pub fidelity_ideal: EstimateWithError,
    pub capacity: CapacitySummary,
    /// `Q₁` on the bootstrap grid, with its spread.
    pub q1_bootstrap: EstimateWithError,
    pub bootstrap_grid: ScanGrid,
}

/// Base seed of one direction, so that runs of different modes at the same
/// seed draw independent noise.
fn mode_seed(seed: u64, mode: NetworkMode) -> u64 {
    let tag = match mode {
        NetworkMode::Unidirectional => 0,
        NetworkMode::BidirectionalAB => 1,
        NetworkMode::BidirectionalBA => 2,
    };
    derive_seed(seed, TAG_MODE + tag)
}

pub fn run(s: &Settings, mode: NetworkMode, out: &mut OutDir) -> Result<PipelineReport> {
    let net = s.network(mode);
    let seed = mode_seed(s.seed, mode);

    let mut records = Vec::new();
    for (label, p) in PROBE_LABELS.iter().zip(probes()) {
        records.push(ProbeOutcomes {
            input: label,
            outcomes: net.run(&p).stage("interferometer")?,
        });
    }
    out.write_json("network_outcomes.json", &records)?;

    let pc: PortChannels = net.extract_port_channels().stage("port extraction")?;
    pc.combined.require_channel().stage("port extraction")?;
    out.write_json(
        "port_channels.json",
        &PortChannelsDoc {
            probabilities: pc.probabilities,
            port0: pc.chis[0].as_ref(),
            port1: pc.chis[1].as_ref(),
            combined: &pc.combined,
        },
    )?;

    let count_seed = derive_seed(seed, TAG_COUNTS);
    let mut tables = [[[0.0; 4]; 4]; 2];
    for k in 0..2 {
        if let Some(chi) = &pc.chis[k] {
            let raw: CMatrix = chi.matrix().scale_real(pc.probabilities[k]);
            tables[k] = simulate_raw_counts(&raw, s.shots, count_seed, k as u64).stage("count simulation")?;
        }
        let t = CountsTable::new(tables[k], s.shots as f64, Some(s.seed)).stage("count simulation")?;
        out.write(&format!("counts_port{k}.csv"), t.to_csv().as_bytes())?;
    }

    let opts: [MlOptions; 2] = std::array::from_fn(|k| MlOptions {
        restarts: s.restarts,
        seed: derive_seed(seed, TAG_ML + k as u64),
        trace_preserving: false,
        ..MlOptions::default()
    });
    let mean = mean_channel(&tables, opts).stage("reconstruction")?;
    let mut port_fidelities = [None, None];
    for k in 0..2 {
        if let (Some(r), Some(ideal)) = (&mean.ports[k], &pc.chis[k]) {
            out.write_json(&format!("reconstructed_port{k}.json"), r)?;
            port_fidelities[k] = Some(process_fidelity(&r.chi, ideal).stage("fidelity")?);
        }
    }
    mean.chi.require_channel().stage("reconstruction")?;
    out.write_json(
        "mean_channel.json",
        &MeanChannelDoc {
            weights: mean.weights,
            chi: &mean.chi,
        },
    )?;

    let cap = q1_scan(&mean.chi, &s.grid, s.keep_surface).stage("capacity")?;
    out.write_json("capacity.json", &cap.summary())?;
    if let Some(surface) = cap.surface_csv() {
        out.write("capacity_surface.csv", surface.as_bytes())?;
    }

    let identity = ChiMatrix::identity();
    let combined = pc.combined.clone();
    let bgrid = s.bootstrap_grid;
    let estimator = |cells: &[f64]| -> fiberchan::Result<Vec<f64>> {
        let m = mean_channel(&split_cells(cells), opts)?;
        Ok(vec![
            process_fidelity(&m.chi, &identity)?,
            process_fidelity(&m.chi, &combined)?,
            q1_scan(&m.chi, &bgrid, false)?.q1,
        ])
    };
    let cells: Vec<f64> = tables.iter().flatten().flatten().copied().collect();
    let cfg = BootstrapConfig::new(s.bootstrap_sets, derive_seed(seed, TAG_BOOTSTRAP)).stage("bootstrap")?;
    let est = bootstrap_many(&cells, estimator, &cfg).stage("bootstrap")?;
    let [fid_id, fid_ideal, q1b]: [EstimateWithError; 3] = est.try_into().expect("three estimates");

    let report = PipelineReport {
        mode,
        port_probabilities: pc.probabilities,
        estimated_weights: mean.weights,
        port_fidelities,
        fidelity_identity: fid_id,
        fidelity_ideal: fid_ideal,
        capacity: cap.summary(),
        q1_bootstrap: q1b,
        bootstrap_grid: bgrid,
    };
    let mut rows = Vec::new();
    for k in 0..2 {
        if let Some(f) = port_fidelities[k] {
            rows.push(vec![format!("port{k}"), format!("simulated_port{k}"), num(f), String::new()]);
        }
    }
    rows.push(vec!["mean".into(), "identity".into(), num(fid_id.value), num(fid_id.std)]);
    rows.push(vec!["mean".into(), "simulated_mean".into(), num(fid_ideal.value), num(fid_ideal.std)]);
    out.write(
        "fidelity.csv",
        csv(&["channel", "reference", "fidelity", "std"], &rows).as_bytes(),
    )?;
    out.write_json("pipeline_report.json", &report)?;
    Ok(report)
}
