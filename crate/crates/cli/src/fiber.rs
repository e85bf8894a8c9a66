//! Characterization of a single fiber.

use fiberchan::capacity::{q1_scan, CapacitySummary};
use fiberchan::channel::apply_chi;
use fiberchan::channel::fiber::{coherence_length, decoherence_fiber_length, single_fiber_gamma, fiber_channel};
use fiberchan::qstate::state_fidelity;
use fiberchan::tomography::{probes, PROBE_LABELS};
use serde::Serialize;

use crate::config::Settings;
use crate::error::{Result, StageExt};
use crate::output::{csv, num, OutDir};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GammaReport {
    pub re: f64,
    pub im: f64,
    pub abs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FiberReport {
    /// Differential group delay in seconds.
    pub kappa: f64,
    pub coherence_length_um: f64,
    pub decoherence_length_m: f64,
    pub gamma: GammaReport,
    pub capacity: CapacitySummary,
    pub probe_fidelities: Vec<(String, f64)>,
}

pub fn run(s: &Settings, out: &mut OutDir) -> Result<FiberReport> {
    let profile = s.profile();
    let lc = coherence_length(s.spectrum.wavelength_nm, s.spectrum.fwhm_nm).stage("fiber")?;
    let ld = decoherence_fiber_length(lc, s.fiber.delta_n).stage("fiber")?;
    let g = single_fiber_gamma(&s.fiber, &profile).value();
    let chi = fiber_channel(&s.fiber, &profile, s.axis).stage("fiber")?;
    let cap = q1_scan(&chi, &s.grid, s.keep_surface).stage("capacity")?;

    let mut probe_fidelities = Vec::new();
    for (label, p) in PROBE_LABELS.iter().zip(probes()) {
        let rho = p.density();
        let f = state_fidelity(&apply_chi(&chi, &rho).stage("fiber")?, &rho).stage("fiber")?;
        probe_fidelities.push((label.to_string(), f));
    }

    let report = FiberReport {
        kappa: s.fiber.kappa(),
        coherence_length_um: lc,
        decoherence_length_m: ld,
        gamma: GammaReport {
            re: g.re,
            im: g.im,
            abs: g.norm(),
        },
        capacity: cap.summary(),
        probe_fidelities,
    };
    out.write_json("fiber_chi.json", &chi)?;
    out.write_json("fiber_capacity.json", &cap.summary())?;
    if let Some(surface) = cap.surface_csv() {
        out.write("fiber_surface.csv", surface.as_bytes())?;
    }
    let rows: Vec<Vec<String>> = report
        .probe_fidelities
        .iter()
        .map(|(l, f)| vec![l.clone(), num(*f)])
        .collect();
    out.write("fiber_probes.csv", csv(&["probe", "fidelity"], &rows).as_bytes())?;
    out.write_json("fiber_report.json", &report)?;
    Ok(report)
}
