//! Desk-scale runs of every headline check, bundled under one directory.

use std::f64::consts::SQRT_2;

use fiberchan::capacity::{data_processing_check, dephasing_capacity_oracle, q1_scan, ScanGrid};
use fiberchan::channel::fiber::{FiberParams, SpectralProfile};
use fiberchan::channel::{dephasing_channel, random_channel, Axis, ChiMatrix};
use fiberchan::chsh::{optimize_angles, TwoQubitState};
use fiberchan::interferometer::{closed_form_output, run_network, NetworkMode, DEFAULT_NODES};
use fiberchan::qstate::random::{random_pure_state, random_state_param};
use fiberchan::qstate::{CMatrix, DensityMatrix};
use fiberchan::stats::stream_rng;
use fiberchan::tomography::{noiseless_counts, process_fidelity, reconstruct_ml, simulate_counts, MlOptions};
use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::config::{derive_seed, ChannelSpec, ExperimentConfig, Mode, Settings};
use crate::error::{Result, StageExt};
use crate::output::{csv, num, Manifest, OutDir};

pub const CURVE_GAMMAS: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];
/// Capacity reported for the paired-fiber experiment.
pub const TARGET_Q1: f64 = 0.636;
/// Coherence of a dephasing channel with process fidelity 0.94.
pub const TUNED_GAMMA: f64 = 0.88;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub criterion: usize,
    pub name: String,
    pub value: f64,
    pub target: String,
    pub pass: bool,
}

fn check(criterion: usize, name: &str, value: f64, target: &str, pass: bool) -> Check {
    Check {
        criterion,
        name: name.to_string(),
        value,
        target: target.to_string(),
        pass,
    }
}

/// Largest `|Ic|` over `grid` for the completely dephasing channel.
pub fn zero_capacity_max_abs(grid: &ScanGrid) -> fiberchan::Result<f64> {
    let chi = dephasing_channel(Complex64::new(0.0, 0.0), Axis::Z)?;
    let r = q1_scan(&chi, grid, true)?;
    Ok(r.surface
        .expect("surface kept")
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs())))
}

/// Bisection for the dephasing coherence whose capacity is `q`.
pub fn gamma_for_capacity(q: f64) -> fiberchan::Result<f64> {
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if dephasing_capacity_oracle(mid)? < q {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Largest elementwise gap between the merged-port simulation and the
/// closed form over `draws` random setups.
pub fn closed_form_gap(draws: usize, seed: u64) -> fiberchan::Result<f64> {
    let mut rng = stream_rng(seed, 0);
    let modes = [
        NetworkMode::Unidirectional,
        NetworkMode::BidirectionalAB,
        NetworkMode::BidirectionalBA,
    ];
    let mut worst = 0.0f64;
    for _ in 0..draws {
        let mode = modes[rng.random_range(0..3)];
        let input = random_pure_state(2, &mut rng);
        // lengths spread over partial coherence and deep dephasing
        let mut length = || 10f64.powf(rng.random_range(-2.0..2.2));
        let (l1, l2) = (length(), length());
        let dn = rng.random_range(1e-4..5e-4);
        let f1 = FiberParams::new(l1, dn)?;
        let f2 = FiberParams::new(l2, dn)?;
        let s = SpectralProfile::from_wavelength(rng.random_range(700.0..900.0), rng.random_range(1.0..5.0))?;
        let outcomes = run_network(mode, &input, &f1, &f2, &s, DEFAULT_NODES)?;
        let mut merged = CMatrix::zeros(2);
        for o in &outcomes {
            if let Some(st) = &o.state {
                merged = &merged + &st.matrix().scale_real(o.probability);
            }
        }
        let cf = closed_form_output(mode, &input, &f1, &f2, &s)?;
        worst = worst.max(merged.max_abs_diff(cf.matrix()));
    }
    Ok(worst)
}

/// Lowest ML fidelity over `n` random channels, with Poisson counts at
/// `shots` and with exact expected counts.
pub fn tomography_fidelities(n: usize, shots: u64, seed: u64) -> fiberchan::Result<(f64, f64)> {
    let mut rng = stream_rng(seed, 0);
    let (mut noisy, mut exact) = (1.0f64, 1.0f64);
    for k in 0..n {
        let chi = random_channel(&mut rng);
        let opts = MlOptions {
            seed: derive_seed(seed, 1000 + k as u64),
            ..MlOptions::default()
        };
        let counts = simulate_counts(&chi, shots, derive_seed(seed, k as u64))?;
        noisy = noisy.min(process_fidelity(&reconstruct_ml(&counts, &opts)?.chi, &chi)?);
        let counts = noiseless_counts(&chi, shots as f64)?;
        exact = exact.min(process_fidelity(&reconstruct_ml(&counts, &opts)?.chi, &chi)?);
    }
    Ok((noisy, exact))
}

/// Largest optimized `S` over random product states and their mixtures.
pub fn separable_max_s(n: usize, seed: u64) -> fiberchan::Result<f64> {
    let mut rng = stream_rng(seed, 0);
    let mut worst = 0.0f64;
    for k in 0..n {
        let terms = if k % 2 == 0 { 1 } else { 3 };
        let mut m = CMatrix::zeros(4);
        let weights: Vec<f64> = (0..terms).map(|_| rng.random_range(0.1..1.0)).collect();
        let total: f64 = weights.iter().sum();
        for w in weights {
            let a = random_pure_state(2, &mut rng).density();
            let b = random_pure_state(2, &mut rng).density();
            m = &m + &a.matrix().kron(b.matrix()).scale_real(w / total);
        }
        let st = TwoQubitState::new(DensityMatrix::with_tolerance(m, 1e-9)?)?;
        worst = worst.max(optimize_angles(&st)?.1);
    }
    let classical = TwoQubitState::new(DensityMatrix::new(CMatrix::diagonal(&[0.5, 0.0, 0.0, 0.5]))?)?;
    Ok(worst.max(optimize_angles(&classical)?.1))
}

/// Number of failures and the tightest margin of the data-processing chain
/// over `n` random channel pairs and inputs.
pub fn data_processing_draws(n: usize, seed: u64) -> fiberchan::Result<(usize, f64)> {
    let mut rng = stream_rng(seed, 0);
    let mut failures = 0;
    let mut margin = f64::INFINITY;
    for _ in 0..n {
        let first = random_channel(&mut rng);
        let second = random_channel(&mut rng);
        let p = random_state_param(&mut rng);
        let r = data_processing_check(&first, &second, &p)?;
        if !r.pass {
            failures += 1;
        }
        margin = margin.min((r.entropy - r.ic_first).min(r.ic_first - r.ic_composed));
    }
    Ok((failures, margin))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReproduceReport {
    pub checks: Vec<Check>,
}

impl ReproduceReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

fn sub_run<T>(
    out: &mut OutDir,
    name: &str,
    seed: u64,
    body: impl FnOnce(&mut OutDir) -> Result<T>,
) -> Result<(T, Manifest)> {
    let mut sub = OutDir::create(out.root().join(name))?;
    let value = body(&mut sub)?;
    let manifest = sub.finish(name, seed)?;
    out.absorb(name, &manifest);
    Ok((value, manifest))
}

pub fn run(seed: u64, out: &mut OutDir) -> Result<ReproduceReport> {
    let mut checks = Vec::new();
    let settings = |mode: Mode, channel: Option<ChannelSpec>| -> Result<Settings> {
        let mut cfg = ExperimentConfig::with_mode(mode);
        cfg.channel = channel;
        cfg.resolve(seed)
    };

    let max_ic = zero_capacity_max_abs(&ScanGrid::default()).stage("zero capacity")?;
    checks.push(check(1, "max |Ic|, complete dephasing", max_ic, "<= 1e-9", max_ic <= 1e-9));

    let (fr, _) = sub_run(out, "fiber", seed, |o| crate::fiber::run(&settings(Mode::Fiber, None)?, o))?;
    let lc = fr.coherence_length_um;
    let ld = fr.decoherence_length_m;
    checks.push(check(2, "coherence length (um)", lc, "213 +- 1%", (lc / 213.0 - 1.0).abs() <= 0.01));
    checks.push(check(2, "decoherence length (m)", ld, "0.61 +- 1%", (ld / 0.61 - 1.0).abs() <= 0.01));

    let (uni, _) = sub_run(out, "pipeline-unidir", seed, |o| {
        crate::pipeline::run(&settings(Mode::Unidir, None)?, NetworkMode::Unidirectional, o)
    })?;
    let f = uni.fidelity_identity.value;
    checks.push(check(3, "unidir mean fidelity", f, ">= 0.999", f >= 0.999));
    let q = uni.capacity.q1;
    checks.push(check(3, "unidir Q1", q, ">= 0.99", q >= 0.99));
    let l0 = uni.capacity.lambda0;
    checks.push(check(3, "unidir argmax lambda0", l0, "0.5 +- 0.02", (l0 - 0.5).abs() <= 0.02));

    let (ab, _) = sub_run(out, "pipeline-bidir-ab", seed, |o| {
        crate::pipeline::run(&settings(Mode::BidirAb, None)?, NetworkMode::BidirectionalAB, o)
    })?;
    let (ba, _) = sub_run(out, "pipeline-bidir-ba", seed, |o| {
        crate::pipeline::run(&settings(Mode::BidirBa, None)?, NetworkMode::BidirectionalBA, o)
    })?;
    let (fa, fb) = (ab.fidelity_identity, ba.fidelity_identity);
    let gap = (fa.value - fb.value).abs();
    let tol = 2.0 * fa.std.hypot(fb.std);
    checks.push(check(4, "|F(AB) - F(BA)|", gap, &format!("<= {tol:.3e}"), gap <= tol));

    let mut rows = Vec::new();
    let mut worst = 0.0f64;
    for g in CURVE_GAMMAS {
        let chi = dephasing_channel(Complex64::new(g, 0.0), Axis::Z).stage("capacity curve")?;
        let q = q1_scan(&chi, &ScanGrid::default(), false).stage("capacity curve")?.q1;
        let oracle = dephasing_capacity_oracle(g).stage("capacity curve")?;
        worst = worst.max((q - oracle).abs());
        rows.push(vec![num(g), num(q), num(oracle)]);
    }
    checks.push(check(5, "capacity curve gap", worst, "<= 0.01", worst <= 0.01));
    let g636 = gamma_for_capacity(TARGET_Q1).stage("capacity curve")?;
    let chi = dephasing_channel(Complex64::new(g636, 0.0), Axis::Z).stage("capacity curve")?;
    let q636 = q1_scan(&chi, &ScanGrid::default(), false).stage("capacity curve")?.q1;
    rows.push(vec![num(g636), num(q636), num(TARGET_Q1)]);
    checks.push(check(5, "Q1 at gamma(0.636)", q636, "0.636 +- 0.01", (q636 - TARGET_Q1).abs() <= 0.01));
    out.write("capacity_curve.csv", csv(&["gamma", "q1", "oracle"], &rows).as_bytes())?;

    let gap = closed_form_gap(100, derive_seed(seed, 6)).stage("closed form")?;
    checks.push(check(6, "simulator vs closed form", gap, "<= 1e-6", gap <= 1e-6));

    let (noisy, exact) = tomography_fidelities(50, 1_000_000, derive_seed(seed, 7)).stage("tomography")?;
    checks.push(check(7, "min ML fidelity, Poisson", noisy, ">= 0.995", noisy >= 0.995));
    checks.push(check(7, "min ML fidelity, noiseless", exact, ">= 1 - 1e-6", exact >= 1.0 - 1e-6));

    let (ideal, _) = sub_run(out, "chsh", seed, |o| crate::chsh::run(&settings(Mode::Chsh, None)?, o))?;
    let half = ideal
        .points
        .iter()
        .find(|p| p.alpha_sq == 0.5)
        .expect("default alpha list contains 0.5");
    let tsirelson = 2.0 * SQRT_2;
    checks.push(check(8, "S, identity", half.s, "2.828427 +- 1e-6", (half.s - tsirelson).abs() <= 1e-6));
    let sc = half.s_counts.value;
    checks.push(check(8, "S from counts, identity", sc, "2.828 +- 0.01", (sc - 2.828).abs() <= 0.01));
    let sep = separable_max_s(100, derive_seed(seed, 8)).stage("chsh")?;
    checks.push(check(8, "max S, separable", sep, "<= 2 + 1e-9", sep <= 2.0 + 1e-9));
    let tuned = ChannelSpec::dephasing(TUNED_GAMMA, Axis::Z);
    let tuned_fid = process_fidelity(
        &dephasing_channel(Complex64::new(TUNED_GAMMA, 0.0), Axis::Z).stage("chsh")?,
        &ChiMatrix::identity(),
    )
    .stage("chsh")?;
    let (noisy_chsh, _) = sub_run(out, "chsh-dephased", seed, |o| {
        let mut s = settings(Mode::Chsh, Some(tuned))?;
        s.alpha_sq = vec![0.5];
        crate::chsh::run(&s, o)
    })?;
    let p = &noisy_chsh.points[0].s_counts;
    let sigmas = (p.value - 2.0) / p.std;
    checks.push(check(
        8,
        &format!("violation at fidelity {tuned_fid:.3} (std units)"),
        sigmas,
        ">= 5",
        sigmas >= 5.0,
    ));

    let (fails, margin) = data_processing_draws(1000, derive_seed(seed, 9)).stage("data processing")?;
    checks.push(check(9, "data-processing violations", fails as f64, "0", fails == 0));
    checks.push(check(9, "data-processing margin", margin, ">= -1e-9", margin >= -1e-9));

    let rows: Vec<Vec<String>> = checks
        .iter()
        .map(|c| {
            vec![
                c.criterion.to_string(),
                c.name.clone(),
                num(c.value),
                c.target.clone(),
                c.pass.to_string(),
            ]
        })
        .collect();
    out.write("summary.csv", csv(&["criterion", "check", "value", "target", "pass"], &rows).as_bytes())?;
    let report = ReproduceReport { checks };
    out.write_json("summary.json", &report)?;
    Ok(report)
}

/// Plain-text table of the checks.
pub fn format_table(report: &ReproduceReport) -> String {
    let mut s = format!("{:<3} {:<44} {:>24} {:<18} {}\n", "#", "check", "value", "target", "result");
    for c in &report.checks {
        s.push_str(&format!(
            "{:<3} {:<44} {:>24} {:<18} {}\n",
            c.criterion,
            c.name,
            format!("{:.10e}", c.value),
            c.target,
            if c.pass { "PASS" } else { "FAIL" }
        ));
    }
    s
}
