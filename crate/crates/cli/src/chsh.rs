//! Entangled inputs with one photon sent through the channel.

use fiberchan::chsh::{
    channel_on_a, chsh_with_error, correlation_e, entangled_input, joint_coherent_info, optimize_angles,
    AngleSet,
};
use fiberchan::qstate::state_fidelity;
use fiberchan::stats::{BootstrapConfig, EstimateWithError};
use serde::Serialize;

use crate::config::{derive_seed, Settings};
use crate::error::{Result, StageExt};
use crate::output::{csv, num, OutDir};

/// Polarizer step of the correlation tables, degrees.
pub const TABLE_STEP_DEG: f64 = 15.0;
const TAG_CHSH: u64 = 100;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChshPoint {
    pub alpha_sq: f64,
    pub state_fidelity: f64,
    pub coherent_information: f64,
    pub angles: AngleSet,
    pub s: f64,
    /// `S` from simulated counts at `angles`, with its resampling spread.
    pub s_counts: EstimateWithError,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChshReport {
    pub shots: u64,
    pub points: Vec<ChshPoint>,
}

pub fn run(s: &Settings, out: &mut OutDir) -> Result<ChshReport> {
    let chi = s.build_channel()?;
    let mut points = Vec::new();
    for (k, &a2) in s.alpha_sq.iter().enumerate() {
        let input = entangled_input(a2).stage("chsh")?;
        let state = channel_on_a(&chi, &input).stage("chsh")?;
        let fidelity = state_fidelity(state.density(), input.density()).stage("chsh")?;
        let ic = joint_coherent_info(&chi, a2).stage("chsh")?;
        let (angles, sv) = optimize_angles(&state).stage("chsh")?;
        let cfg = BootstrapConfig::new(s.bootstrap_sets, derive_seed(s.seed, TAG_CHSH + k as u64)).stage("bootstrap")?;
        let s_counts = chsh_with_error(&state, &angles, s.shots, &cfg).stage("bootstrap")?;

        let n = (180.0 / TABLE_STEP_DEG).round() as usize;
        let mut rows = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let (t1, t2) = (i as f64 * TABLE_STEP_DEG, j as f64 * TABLE_STEP_DEG);
                let e = correlation_e(&state, t1, t2).stage("chsh")?;
                rows.push(vec![num(t1), num(t2), num(e)]);
            }
        }
        out.write(
            &format!("chsh_correlations_{k}.csv"),
            csv(&["theta1", "theta2", "E"], &rows).as_bytes(),
        )?;
        points.push(ChshPoint {
            alpha_sq: a2,
            state_fidelity: fidelity,
            coherent_information: ic,
            angles,
            s: sv,
            s_counts,
        });
    }
    let report = ChshReport {
        shots: s.shots,
        points,
    };
    out.write_json("chsh.json", &report)?;
    Ok(report)
}
