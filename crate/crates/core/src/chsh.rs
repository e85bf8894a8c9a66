//! Polarization-entangled pairs `α|HH⟩ + β|VV⟩` with one photon sent through
//! a channel, linear-polarizer correlations and the CHSH value
//! `S = E(θ₁,θ₂) + E(θ₁,θ₂′) + E(θ₁′,θ₂) − E(θ₁′,θ₂′)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{apply_on_first_linear, ChiMatrix};
use crate::qstate::linalg::ZERO;
use crate::qstate::{matrix_entropy, trace_out, DensityMatrix, Subsystem};
use crate::stats::{bootstrap, poisson_sample, stream_rng, BootstrapConfig, EstimateWithError};
use crate::{Error, Result};

/// Two-photon density matrix over `{H,V} ⊗ {H,V}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct TwoQubitState(DensityMatrix);

impl TwoQubitState {
    pub fn new(rho: DensityMatrix) -> Result<Self> {
        if rho.dim() != 4 {
            return Err(Error::Dimension {
                expected: 4,
                found: rho.dim(),
            });
        }
        Ok(Self(rho))
    }

    pub fn density(&self) -> &DensityMatrix {
        &self.0
    }
}

/// Polarizer angles in degrees, taken mod 180°.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AngleSet {
    pub theta1: f64,
    pub theta1p: f64,
    pub theta2: f64,
    pub theta2p: f64,
}

impl AngleSet {
    /// Settings reaching `2√2` on `(|HH⟩ + |VV⟩)/√2`.
    pub const CANONICAL: AngleSet = AngleSet {
        theta1: 0.0,
        theta1p: 45.0,
        theta2: 22.5,
        theta2p: 157.5,
    };

    pub fn as_array(&self) -> [f64; 4] {
        [self.theta1, self.theta1p, self.theta2, self.theta2p]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        let m = |x: f64| x.rem_euclid(180.0);
        Self {
            theta1: m(a[0]),
            theta1p: m(a[1]),
            theta2: m(a[2]),
            theta2p: m(a[3]),
        }
    }

    /// The four `(θ_A, θ_B)` settings in the order they enter `S`, with signs.
    pub fn settings(&self) -> [(f64, f64, f64); 4] {
        [
            (self.theta1, self.theta2, 1.0),
            (self.theta1, self.theta2p, 1.0),
            (self.theta1p, self.theta2, 1.0),
            (self.theta1p, self.theta2p, -1.0),
        ]
    }
}

/// `α|HH⟩ + √(1−α²)|VV⟩`.
pub fn entangled_input(alpha_sq: f64) -> Result<TwoQubitState> {
    if !(0.0..=1.0).contains(&alpha_sq) {
        return Err(Error::InvalidParameter(format!("alpha^2 = {alpha_sq} outside [0, 1]")));
    }
    let a = Complex64::new(alpha_sq.sqrt(), 0.0);
    let b = Complex64::new((1.0 - alpha_sq).sqrt(), 0.0);
    TwoQubitState::new(DensityMatrix::from_pure(&[a, ZERO, ZERO, b])?)
}

/// `(E ⊗ id)(ρ_AB)`: the channel acts on photon A.
pub fn channel_on_a(chi: &ChiMatrix, s: &TwoQubitState) -> Result<TwoQubitState> {
    let report = chi.require_channel()?;
    let out = apply_on_first_linear(chi.matrix(), s.0.matrix());
    TwoQubitState::new(DensityMatrix::with_tolerance(out, 1e-9 + 4.0 * report.tp_defect)?)
}

fn polarizer(deg: f64) -> [f64; 2] {
    let t = deg.to_radians();
    [t.cos(), t.sin()]
}

/// `⟨θ₁,θ₂|ρ|θ₁,θ₂⟩` with `|θ⟩ = cos θ|H⟩ + sin θ|V⟩`.
pub fn coincidence_probability(s: &TwoQubitState, theta1: f64, theta2: f64) -> f64 {
    let (a, b) = (polarizer(theta1), polarizer(theta2));
    let v = [a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]];
    let m = s.0.matrix();
    let mut p = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            p += v[i] * v[j] * m[(i, j)].re;
        }
    }
    p.clamp(0.0, 1.0)
}

/// The four coincidence probabilities `(θ₁θ₂, θ₁⊥θ₂⊥, θ₁θ₂⊥, θ₁⊥θ₂)`.
fn four_probabilities(s: &TwoQubitState, t1: f64, t2: f64) -> [f64; 4] {
    [
        coincidence_probability(s, t1, t2),
        coincidence_probability(s, t1 + 90.0, t2 + 90.0),
        coincidence_probability(s, t1, t2 + 90.0),
        coincidence_probability(s, t1 + 90.0, t2),
    ]
}

fn correlation_from(c: &[f64]) -> Result<f64> {
    let den = c[0] + c[1] + c[2] + c[3];
    if !(den > 0.0) {
        return Err(Error::UndefinedCorrelation);
    }
    Ok((c[0] + c[1] - c[2] - c[3]) / den)
}

pub fn correlation_e(s: &TwoQubitState, theta1: f64, theta2: f64) -> Result<f64> {
    correlation_from(&four_probabilities(s, theta1, theta2))
}

pub fn chsh_s(s: &TwoQubitState, a: &AngleSet) -> Result<f64> {
    a.settings()
        .iter()
        .map(|&(t1, t2, sign)| Ok(sign * correlation_e(s, t1, t2)?))
        .sum()
}

/// Coordinate ascent over the four angles. `S` is a sinusoid of period 180°
/// in each angle, so every coordinate step is solved exactly from three
/// samples.
pub fn optimize_angles(s: &TwoQubitState) -> Result<(AngleSet, f64)> {
    let starts = [
        AngleSet::CANONICAL.as_array(),
        [0.0, 45.0, 22.5, 67.5],
        [0.0, 90.0, 45.0, 135.0],
        [30.0, 120.0, 10.0, 100.0],
        [60.0, 15.0, 80.0, 170.0],
        [10.0, 55.0, 140.0, 95.0],
    ];
    let eval = |a: [f64; 4]| chsh_s(s, &AngleSet::from_array(a));
    let mut best: Option<([f64; 4], f64)> = None;
    for start in starts {
        let mut a = start;
        let mut val = eval(a)?;
        for _ in 0..500 {
            let before = val;
            for k in 0..4 {
                let mut probe = a;
                let mut sample = |deg: f64| {
                    probe[k] = deg;
                    eval(probe)
                };
                let (s0, s45, s90) = (sample(0.0)?, sample(45.0)?, sample(90.0)?);
                let amp_c = 0.5 * (s0 - s90);
                let mid = 0.5 * (s0 + s90);
                let amp_s = s45 - mid;
                let opt = 0.5 * amp_s.atan2(amp_c).to_degrees();
                let mut cand = a;
                cand[k] = opt.rem_euclid(180.0);
                let v = eval(cand)?;
                if v > val {
                    a = cand;
                    val = v;
                }
            }
            if val - before < 1e-15 {
                break;
            }
        }
        if best.is_none_or(|(_, b)| val > b) {
            best = Some((a, val));
        }
    }
    let (a, v) = best.expect("non-empty start list");
    Ok((AngleSet::from_array(a), v))
}

/// `Ic = S(ρ'_A) − S(ρ'_AB)` after the channel acts on photon A of
/// `α|HH⟩ + β|VV⟩`.
pub fn joint_coherent_info(chi: &ChiMatrix, alpha_sq: f64) -> Result<f64> {
    let out = channel_on_a(chi, &entangled_input(alpha_sq)?)?;
    let joint = out.0.matrix();
    let reduced = trace_out(joint, Subsystem::Second)?;
    Ok(matrix_entropy(&reduced)? - matrix_entropy(joint)?)
}

/// Poisson coincidence counts for the four settings of `a`: 16 cells, four
/// per setting in the order `(θ₁θ₂, θ₁⊥θ₂⊥, θ₁θ₂⊥, θ₁⊥θ₂)`.
pub fn simulate_chsh_counts(s: &TwoQubitState, a: &AngleSet, shots: u64, seed: u64) -> Result<Vec<f64>> {
    let mut rng = stream_rng(seed, 0);
    let mut out = Vec::with_capacity(16);
    for (t1, t2, _) in a.settings() {
        for p in four_probabilities(s, t1, t2) {
            out.push(poisson_sample(shots as f64 * p, &mut rng)? as f64);
        }
    }
    Ok(out)
}

/// `S` from the 16 cells of [`simulate_chsh_counts`].
pub fn s_from_counts(counts: &[f64]) -> Result<f64> {
    if counts.len() != 16 {
        return Err(Error::Dimension {
            expected: 16,
            found: counts.len(),
        });
    }
    let signs = [1.0, 1.0, 1.0, -1.0];
    counts
        .chunks(4)
        .zip(signs)
        .map(|(c, sign)| Ok(sign * correlation_from(c)?))
        .sum()
}

/// `S` with a resampling error bar from simulated counts.
pub fn chsh_with_error(
    s: &TwoQubitState,
    a: &AngleSet,
    shots: u64,
    cfg: &BootstrapConfig,
) -> Result<EstimateWithError> {
    let counts = simulate_chsh_counts(s, a, shots, cfg.seed)?;
    // resampling streams start after the stream used for the counts
    let cfg = BootstrapConfig::new(cfg.n_sets, cfg.seed.wrapping_add(1))?;
    bootstrap(&counts, s_from_counts, &cfg)
}
