//! Coherent information `Ic = S(E(ρ)) − S((E ⊗ id)(|Ψ⟩⟨Ψ|))`, entropy
//! exchange and the single-use capacity `Q₁` as a grid maximum over the
//! `(λ₀, θ, φ)` input family.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{compose, ChiMatrix};
use crate::qstate::linalg::ZERO;
use crate::qstate::{
    binary_entropy, eigvals_hermitian_2x2, purify, spectrum_entropy, state_from_params,
    von_neumann_entropy, CMatrix, StateParam,
};
use crate::{Error, Result};

/// Evaluates coherent information for one channel at many inputs.
pub struct CoherentInfo {
    kraus: Vec<CMatrix>,
}

impl CoherentInfo {
    pub fn new(chi: &ChiMatrix) -> Result<Self> {
        chi.require_channel()?;
        Ok(Self {
            kraus: chi.kraus().operators().to_vec(),
        })
    }

    /// `(E ⊗ id)(|Ψ⟩⟨Ψ|)` for the purification of `p`.
    pub fn joint_output(&self, p: &StateParam) -> CMatrix {
        let psi = purify(p).amplitudes;
        let mut joint = CMatrix::zeros(4);
        for k in &self.kraus {
            let mut v = [ZERO; 4];
            for s in 0..2 {
                for r in 0..2 {
                    v[2 * s + r] = k[(s, 0)] * psi[r] + k[(s, 1)] * psi[2 + r];
                }
            }
            for a in 0..4 {
                for b in 0..4 {
                    joint[(a, b)] += v[a] * v[b].conj();
                }
            }
        }
        joint
    }

    /// `(Ic, S(E(ρ)), S_exchange)`.
    pub fn evaluate(&self, p: &StateParam) -> Result<(f64, f64, f64)> {
        let joint = self.joint_output(p);
        let a = joint[(0, 0)].re + joint[(1, 1)].re;
        let b = joint[(2, 2)].re + joint[(3, 3)].re;
        let c: Complex64 = joint[(0, 2)] + joint[(1, 3)];
        let mean = 0.5 * (a + b);
        let radius = (0.25 * (a - b) * (a - b) + c.norm_sqr()).sqrt();
        let s_out = spectrum_entropy(&[mean + radius, mean - radius])?;
        let s_ex = spectrum_entropy(&joint.eigvalsh())?;
        Ok((s_out - s_ex, s_out, s_ex))
    }

    pub fn coherent_information(&self, p: &StateParam) -> Result<f64> {
        Ok(self.evaluate(p)?.0)
    }
}

pub fn coherent_information(chi: &ChiMatrix, p: &StateParam) -> Result<f64> {
    CoherentInfo::new(chi)?.coherent_information(p)
}

/// Entropy of the joint system/reference output.
pub fn entropy_exchange(chi: &ChiMatrix, p: &StateParam) -> Result<f64> {
    Ok(CoherentInfo::new(chi)?.evaluate(p)?.2)
}

/// Sample counts of the `(λ₀, θ, φ)` grid. `λ₀` includes both endpoints;
/// `θ ∈ [0, π)` and `φ ∈ [0, 2π)` exclude the upper one.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanGrid {
    pub lambda_points: usize,
    pub theta_points: usize,
    pub phi_points: usize,
}

impl Default for ScanGrid {
    fn default() -> Self {
        Self {
            lambda_points: 101,
            theta_points: 50,
            phi_points: 100,
        }
    }
}

impl ScanGrid {
    /// Grid with steps `dλ`, `dθ`, `dφ`; each must divide its range.
    pub fn from_steps(d_lambda: f64, d_theta: f64, d_phi: f64) -> Result<Self> {
        let count = |range: f64, step: f64, name: &str| -> Result<usize> {
            if !(step > 0.0) || step > range {
                return Err(Error::InvalidParameter(format!("{name} step {step} out of range")));
            }
            let n = (range / step).round();
            if ((range / step) - n).abs() > 1e-9 {
                return Err(Error::InvalidParameter(format!(
                    "{name} step {step} does not divide {range}"
                )));
            }
            Ok(n as usize)
        };
        Ok(Self {
            lambda_points: count(1.0, d_lambda, "lambda0")? + 1,
            theta_points: count(PI, d_theta, "theta")?,
            phi_points: count(2.0 * PI, d_phi, "phi")?,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambda_points < 2 || self.theta_points < 1 || self.phi_points < 1 {
            return Err(Error::InvalidParameter(format!("degenerate scan grid {self:?}")));
        }
        Ok(())
    }

    pub fn lambda0(&self, i: usize) -> f64 {
        i as f64 / (self.lambda_points - 1) as f64
    }

    pub fn theta(&self, j: usize) -> f64 {
        j as f64 * PI / self.theta_points as f64
    }

    pub fn phi(&self, k: usize) -> f64 {
        k as f64 * 2.0 * PI / self.phi_points as f64
    }

    pub fn param(&self, i: usize, j: usize, k: usize) -> StateParam {
        StateParam {
            lambda0: self.lambda0(i),
            theta: self.theta(j),
            phi: self.phi(k),
        }
    }

    pub fn len(&self) -> usize {
        self.lambda_points * self.theta_points * self.phi_points
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CapacityResult {
    pub q1: f64,
    pub argmax: StateParam,
    pub grid: ScanGrid,
    /// `Ic` in `(λ₀, θ, φ)` row-major order, when retained.
    pub surface: Option<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapacitySummary {
    #[serde(rename = "Q1")]
    pub q1: f64,
    pub lambda0: f64,
    pub theta: f64,
    pub phi: f64,
}

impl CapacityResult {
    pub fn summary(&self) -> CapacitySummary {
        CapacitySummary {
            q1: self.q1,
            lambda0: self.argmax.lambda0,
            theta: self.argmax.theta,
            phi: self.argmax.phi,
        }
    }

    /// `lambda0,theta,phi,Ic` rows, if the surface was retained.
    pub fn surface_csv(&self) -> Option<String> {
        let surface = self.surface.as_ref()?;
        let g = &self.grid;
        let mut s = String::from("lambda0,theta,phi,Ic\n");
        let mut idx = 0;
        for i in 0..g.lambda_points {
            for j in 0..g.theta_points {
                for k in 0..g.phi_points {
                    let _ = writeln!(
                        s,
                        "{:.16e},{:.16e},{:.16e},{:.16e}",
                        g.lambda0(i),
                        g.theta(j),
                        g.phi(k),
                        surface[idx]
                    );
                    idx += 1;
                }
            }
        }
        Some(s)
    }
}

/// Exhaustive grid maximum of `Ic`. Ties resolve to the lexicographically
/// first `(λ₀, θ, φ)`.
pub fn q1_scan(chi: &ChiMatrix, grid: &ScanGrid, keep_surface: bool) -> Result<CapacityResult> {
    grid.validate()?;
    let ci = CoherentInfo::new(chi)?;
    let slabs: Vec<Vec<f64>> = (0..grid.lambda_points)
        .into_par_iter()
        .map(|i| {
            let mut out = Vec::with_capacity(grid.theta_points * grid.phi_points);
            for j in 0..grid.theta_points {
                for k in 0..grid.phi_points {
                    out.push(ci.coherent_information(&grid.param(i, j, k))?);
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let mut best = (f64::NEG_INFINITY, 0usize);
    for (n, &v) in slabs.iter().flatten().enumerate() {
        if v > best.0 {
            best = (v, n);
        }
    }
    let per_lambda = grid.theta_points * grid.phi_points;
    let (i, rest) = (best.1 / per_lambda, best.1 % per_lambda);
    let (j, k) = (rest / grid.phi_points, rest % grid.phi_points);
    Ok(CapacityResult {
        q1: best.0,
        argmax: grid.param(i, j, k),
        grid: *grid,
        surface: keep_surface.then(|| slabs.into_iter().flatten().collect()),
    })
}

/// `1 − H₂((1 − γ)/2)`, the capacity of real dephasing with coherence `γ`.
pub fn dephasing_capacity_oracle(gamma: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::InvalidParameter(format!("gamma = {gamma} outside [0, 1]")));
    }
    Ok(1.0 - binary_entropy((1.0 - gamma) / 2.0))
}

/// Spectrum of the joint output of complete Z dephasing, from its two
/// reference-space blocks `M₁ = ⟨0|·|0⟩` and `M₂ = ⟨1|·|1⟩`.
pub fn complete_dephasing_joint_spectrum(p: &StateParam) -> [f64; 4] {
    let (s, c) = p.theta.sin_cos();
    let (l0, l1) = (p.lambda0, p.lambda1());
    let x = (l0 * l1).sqrt() * s * c;
    let (a, b) = eigvals_hermitian_2x2(l0 * c * c, l1 * s * s, x);
    let (d, e) = eigvals_hermitian_2x2(l0 * s * s, l1 * c * c, -x);
    [a, b, d, e]
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DataProcessingReport {
    pub entropy: f64,
    pub ic_first: f64,
    pub ic_composed: f64,
    pub pass: bool,
}

/// Checks `S(ρ) ≥ Ic(E₁, ρ) ≥ Ic(E₂∘E₁, ρ)` with `1e-9` slack.
pub fn data_processing_check(
    first: &ChiMatrix,
    second: &ChiMatrix,
    p: &StateParam,
) -> Result<DataProcessingReport> {
    let entropy = von_neumann_entropy(&state_from_params(p))?;
    let ic_first = coherent_information(first, p)?;
    let ic_composed = coherent_information(&compose(first, second), p)?;
    Ok(DataProcessingReport {
        entropy,
        ic_first,
        ic_composed,
        pass: entropy >= ic_first - 1e-9 && ic_first >= ic_composed - 1e-9,
    })
}
