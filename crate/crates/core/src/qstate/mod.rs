//! Quantum-state primitives: density matrices, pure states, the
//! three-parameter qubit family `(λ₀, θ, φ)`, purification, partial trace,
//! von Neumann entropy and Uhlmann fidelity.
//!
//! Two-qubit matrices use the ordering `|a b⟩ ↦ 2a + b`, with the first
//! factor the system (or photon A) and the second the reference (photon B).

pub mod linalg;
pub mod random;

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use linalg::{CMatrix, MatrixDoc};
use linalg::{I, ONE, ZERO};

use crate::{Error, Result};

/// Hermiticity and trace tolerance for [`DensityMatrix`].
pub const STATE_TOL: f64 = 1e-10;
/// Eigenvalues in `[-STATE_TOL, ENTROPY_CLAMP)` contribute nothing to entropy.
pub const ENTROPY_CLAMP: f64 = 1e-12;
/// Spectral cut applied before matrix square roots in the fidelity.
const FIDELITY_CLAMP: f64 = 1e-14;

/// Hermitian, positive semidefinite, unit-trace matrix.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct DensityMatrix(CMatrix);

impl DensityMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        Self::with_tolerance(m, STATE_TOL)
    }

    /// Validates with a caller-supplied tolerance and stores the Hermitian
    /// part of the input.
    pub fn with_tolerance(m: CMatrix, tol: f64) -> Result<Self> {
        let defect = m.hermiticity_defect();
        if defect > tol {
            return Err(Error::InvalidState(format!(
                "not Hermitian (defect {defect:e})"
            )));
        }
        let m = m.hermitian_part();
        let tr = m.trace().re;
        if (tr - 1.0).abs() > tol {
            return Err(Error::InvalidState(format!("trace is {tr}, expected 1")));
        }
        let min = m.eigvalsh()[0];
        if min < -tol {
            return Err(Error::InvalidState(format!(
                "not positive semidefinite (min eigenvalue {min:e})"
            )));
        }
        Ok(Self(m))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self(CMatrix::identity(dim).scale_real(1.0 / dim as f64))
    }

    pub fn from_pure(amplitudes: &[Complex64]) -> Result<Self> {
        let norm: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum();
        if (norm - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidState(format!(
                "state vector has squared norm {norm}"
            )));
        }
        Ok(Self(CMatrix::outer(amplitudes)))
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.0.eigvalsh()
    }

    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        DensityMatrix(self.0.kron(&other.0))
    }
}

impl<'de> Deserialize<'de> for DensityMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let m = CMatrix::deserialize(d)?;
        DensityMatrix::new(m).map_err(serde::de::Error::custom)
    }
}

/// Normalised state vector.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    amplitudes: Vec<Complex64>,
}

impl PureState {
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        let norm: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum();
        if (norm - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidState(format!(
                "state vector has squared norm {norm}"
            )));
        }
        Ok(Self { amplitudes })
    }

    /// Rescales a non-zero vector to unit norm.
    pub fn normalized(amplitudes: Vec<Complex64>) -> Result<Self> {
        let norm: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidState("cannot normalise a zero vector".into()));
        }
        Ok(Self {
            amplitudes: amplitudes.into_iter().map(|z| z / norm).collect(),
        })
    }

    /// `α|H⟩ + β|V⟩`
    pub fn qubit(alpha: Complex64, beta: Complex64) -> Result<Self> {
        Self::new(vec![alpha, beta])
    }

    pub fn h() -> Self {
        Self {
            amplitudes: vec![ONE, ZERO],
        }
    }

    pub fn v() -> Self {
        Self {
            amplitudes: vec![ZERO, ONE],
        }
    }

    /// `(|H⟩ + |V⟩)/√2`
    pub fn d() -> Self {
        let a = Complex64::new(FRAC_1_SQRT_2, 0.0);
        Self {
            amplitudes: vec![a, a],
        }
    }

    /// `(|H⟩ − |V⟩)/√2`
    pub fn j() -> Self {
        let a = Complex64::new(FRAC_1_SQRT_2, 0.0);
        Self {
            amplitudes: vec![a, -a],
        }
    }

    /// `(|H⟩ − i|V⟩)/√2`
    pub fn r() -> Self {
        Self {
            amplitudes: vec![Complex64::new(FRAC_1_SQRT_2, 0.0), -I * FRAC_1_SQRT_2],
        }
    }

    /// `(|H⟩ + i|V⟩)/√2`
    pub fn l() -> Self {
        Self {
            amplitudes: vec![Complex64::new(FRAC_1_SQRT_2, 0.0), I * FRAC_1_SQRT_2],
        }
    }

    /// Linear polarization at `angle_deg`: `cos θ|H⟩ + sin θ|V⟩`.
    pub fn linear(angle_deg: f64) -> Self {
        let t = angle_deg.to_radians();
        Self {
            amplitudes: vec![Complex64::new(t.cos(), 0.0), Complex64::new(t.sin(), 0.0)],
        }
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn density(&self) -> DensityMatrix {
        DensityMatrix(CMatrix::outer(&self.amplitudes))
    }

    pub fn inner(&self, other: &PureState) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }
}

/// Input-state family `ρ = λ₀|ψ⟩⟨ψ| + λ₁|ψ⊥⟩⟨ψ⊥|` with
/// `|ψ⟩ = cos θ|0⟩ + sin θ e^{iφ}|1⟩` and `|ψ⊥⟩ = sin θ|0⟩ − cos θ e^{iφ}|1⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateParam {
    pub lambda0: f64,
    pub theta: f64,
    pub phi: f64,
}

impl StateParam {
    pub fn new(lambda0: f64, theta: f64, phi: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda0) {
            return Err(Error::InvalidParameter(format!(
                "lambda0 = {lambda0} outside [0, 1]"
            )));
        }
        if !(0.0..PI).contains(&theta) {
            return Err(Error::InvalidParameter(format!(
                "theta = {theta} outside [0, pi)"
            )));
        }
        if !(0.0..2.0 * PI).contains(&phi) {
            return Err(Error::InvalidParameter(format!(
                "phi = {phi} outside [0, 2pi)"
            )));
        }
        Ok(Self {
            lambda0,
            theta,
            phi,
        })
    }

    pub fn lambda1(&self) -> f64 {
        1.0 - self.lambda0
    }

    /// `(|ψ⟩, |ψ⊥⟩)` as amplitude pairs.
    pub fn basis(&self) -> ([Complex64; 2], [Complex64; 2]) {
        let (s, c) = self.theta.sin_cos();
        let e = Complex64::from_polar(1.0, self.phi);
        ([Complex64::new(c, 0.0), e * s], [Complex64::new(s, 0.0), -e * c])
    }
}

/// Pure state on system ⊗ reference, amplitudes indexed `2·s + r`.
#[derive(Clone, Debug, PartialEq)]
pub struct BipartitePureState {
    pub amplitudes: [Complex64; 4],
}

impl BipartitePureState {
    pub fn density(&self) -> DensityMatrix {
        DensityMatrix(CMatrix::outer(&self.amplitudes))
    }
}

/// Which factor of a two-qubit system a partial trace removes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subsystem {
    First,
    Second,
}

/// Entropy in bits of a spectrum, with `0·log 0 = 0`.
pub fn spectrum_entropy(eigenvalues: &[f64]) -> Result<f64> {
    let mut s = 0.0;
    for &l in eigenvalues {
        if l < -STATE_TOL {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {l:e} in entropy"
            )));
        }
        if l >= ENTROPY_CLAMP {
            s -= l * l.log2();
        }
    }
    Ok(s.max(0.0))
}

/// `S(ρ) = −Tr ρ log₂ ρ`.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64> {
    spectrum_entropy(&rho.eigenvalues())
}

/// Entropy of a matrix that has not been validated as a state yet (e.g. a
/// joint channel output). Fails on Hermiticity or positivity violations.
pub fn matrix_entropy(m: &CMatrix) -> Result<f64> {
    let defect = m.hermiticity_defect();
    if defect > STATE_TOL {
        return Err(Error::InvalidState(format!(
            "not Hermitian (defect {defect:e})"
        )));
    }
    spectrum_entropy(&m.eigvalsh())
}

pub fn state_from_params(p: &StateParam) -> DensityMatrix {
    let (psi, perp) = p.basis();
    let a = CMatrix::outer(&psi).scale_real(p.lambda0);
    let b = CMatrix::outer(&perp).scale_real(p.lambda1());
    DensityMatrix((&a + &b).hermitian_part())
}

/// `|Ψ⟩ = √λ₀|ψ⟩|0⟩ᵣ + √λ₁|ψ⊥⟩|1⟩ᵣ`
pub fn purify(p: &StateParam) -> BipartitePureState {
    let (psi, perp) = p.basis();
    let (a, b) = (p.lambda0.sqrt(), p.lambda1().max(0.0).sqrt());
    let mut amps = [ZERO; 4];
    for s in 0..2 {
        amps[2 * s] = psi[s] * a;
        amps[2 * s + 1] = perp[s] * b;
    }
    BipartitePureState { amplitudes: amps }
}

/// Partial trace of an arbitrary 4×4 operator.
pub fn trace_out(m: &CMatrix, traced: Subsystem) -> Result<CMatrix> {
    if m.dim() != 4 {
        return Err(Error::Dimension {
            expected: 4,
            found: m.dim(),
        });
    }
    Ok(CMatrix::from_fn(2, |i, j| match traced {
        Subsystem::Second => m[(2 * i, 2 * j)] + m[(2 * i + 1, 2 * j + 1)],
        Subsystem::First => m[(i, j)] + m[(2 + i, 2 + j)],
    }))
}

pub fn partial_trace(rho: &DensityMatrix, traced: Subsystem) -> Result<DensityMatrix> {
    Ok(DensityMatrix(trace_out(rho.matrix(), traced)?.hermitian_part()))
}

/// Uhlmann fidelity `(Tr √(√ρ σ √ρ))²` of two positive semidefinite,
/// unit-trace matrices, evaluated as the squared trace norm of `√ρ √σ`.
pub fn uhlmann_fidelity(rho: &CMatrix, sigma: &CMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::Dimension {
            expected: rho.dim(),
            found: sigma.dim(),
        });
    }
    let root = |m: &CMatrix| {
        let (vals, _) = m.eigh();
        let cut = FIDELITY_CLAMP * vals.last().copied().unwrap_or(0.0).abs().max(1.0);
        m.map_spectrum(|x| if x > cut { x.sqrt() } else { 0.0 })
    };
    let prod = &root(rho) * &root(sigma);
    let n = prod.dim();
    let svd = DMatrix::from_fn(n, n, |i, j| prod[(i, j)]).svd(false, false);
    let nuclear: f64 = svd.singular_values.iter().sum();
    Ok((nuclear * nuclear).clamp(0.0, 1.0))
}

pub fn state_fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    uhlmann_fidelity(rho.matrix(), sigma.matrix())
}

/// Eigenvalues of the real symmetric matrix `[[a, c], [c, b]]`, descending.
pub fn eigvals_hermitian_2x2(a: f64, b: f64, c: f64) -> (f64, f64) {
    let mean = 0.5 * (a + b);
    let radius = 0.5 * ((a - b) * (a - b) + 4.0 * c * c).sqrt();
    (mean + radius, mean - radius)
}

/// Binary entropy in bits.
pub fn binary_entropy(p: f64) -> f64 {
    let h = |x: f64| if x > 0.0 { -x * x.log2() } else { 0.0 };
    h(p) + h(1.0 - p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    #[test]
    fn entropy_examples() {
        assert_close(
            von_neumann_entropy(&DensityMatrix::maximally_mixed(2)).unwrap(),
            1.0,
            1e-14,
        );
        assert_close(von_neumann_entropy(&PureState::r().density()).unwrap(), 0.0, 1e-14);
        let rho = DensityMatrix::new(CMatrix::diagonal(&[0.9, 0.1])).unwrap();
        assert_close(von_neumann_entropy(&rho).unwrap(), 0.468_995_593_589_281_2, 1e-12);
    }

    #[test]
    fn entropy_rejects_negative_spectrum() {
        assert!(spectrum_entropy(&[1.0 + 1e-6, -1e-6]).is_err());
        // numerical noise is clamped
        assert_close(spectrum_entropy(&[1.0, -1e-11]).unwrap(), 0.0, 1e-15);
    }

    #[test]
    fn density_matrix_validation() {
        assert!(DensityMatrix::new(CMatrix::diagonal(&[0.6, 0.6])).is_err());
        assert!(DensityMatrix::new(CMatrix::diagonal(&[1.2, -0.2])).is_err());
        let mut m = CMatrix::diagonal(&[0.5, 0.5]);
        m[(0, 1)] = Complex64::new(0.1, 0.0);
        assert!(DensityMatrix::new(m).is_err());
    }

    #[test]
    fn state_param_examples() {
        let p = StateParam::new(1.0, 0.0, 0.0).unwrap();
        let rho = state_from_params(&p);
        assert!(rho.matrix().max_abs_diff(&CMatrix::diagonal(&[1.0, 0.0])) < 1e-15);

        let p = StateParam::new(0.5, 1.234, 4.2).unwrap();
        assert!(
            state_from_params(&p)
                .matrix()
                .max_abs_diff(&CMatrix::diagonal(&[0.5, 0.5]))
                < 1e-15
        );

        // the capacity-achieving input of the paired channel
        let p = StateParam::new(0.52, 39.0 * PI / 50.0, PI / 50.0).unwrap();
        let rho = state_from_params(&p);
        let ev = rho.eigenvalues();
        assert_close(ev[1], 0.52, 1e-12);
        assert_close(ev[0], 0.48, 1e-12);
    }

    #[test]
    fn state_param_rejects_out_of_range() {
        assert!(StateParam::new(1.1, 0.0, 0.0).is_err());
        assert!(StateParam::new(0.5, PI, 0.0).is_err());
        assert!(StateParam::new(0.5, 0.0, 2.0 * PI).is_err());
    }

    #[test]
    fn purify_examples() {
        let p = StateParam::new(1.0, 0.0, 0.0).unwrap();
        let psi = purify(&p);
        assert_eq!(psi.amplitudes, [ONE, ZERO, ZERO, ZERO]);

        let p = StateParam::new(0.5, PI / 4.0, 0.0).unwrap();
        let joint = purify(&p).density();
        for traced in [Subsystem::First, Subsystem::Second] {
            let red = partial_trace(&joint, traced).unwrap();
            assert!(red.matrix().max_abs_diff(&CMatrix::diagonal(&[0.5, 0.5])) < 1e-15);
        }
    }

    #[test]
    fn partial_trace_of_product_and_bell() {
        let rho = state_from_params(&StateParam::new(0.3, 0.4, 1.0).unwrap());
        let sigma = PureState::d().density();
        let prod = rho.tensor(&sigma);
        let back = partial_trace(&prod, Subsystem::Second).unwrap();
        assert!(back.matrix().max_abs_diff(rho.matrix()) < 1e-15);
        let back = partial_trace(&prod, Subsystem::First).unwrap();
        assert!(back.matrix().max_abs_diff(sigma.matrix()) < 1e-15);

        let a = Complex64::new(FRAC_1_SQRT_2, 0.0);
        let bell = DensityMatrix::from_pure(&[a, ZERO, ZERO, a]).unwrap();
        for traced in [Subsystem::First, Subsystem::Second] {
            let red = partial_trace(&bell, traced).unwrap();
            assert!(red.matrix().max_abs_diff(&CMatrix::diagonal(&[0.5, 0.5])) < 1e-15);
        }
    }

    #[test]
    fn partial_trace_rejects_qubit() {
        assert!(matches!(
            partial_trace(&DensityMatrix::maximally_mixed(2), Subsystem::First),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn fidelity_examples() {
        let rho = state_from_params(&StateParam::new(0.3, 0.4, 1.0).unwrap());
        assert_close(state_fidelity(&rho, &rho).unwrap(), 1.0, 1e-12);
        let f = state_fidelity(&PureState::h().density(), &PureState::v().density()).unwrap();
        assert_close(f, 0.0, 1e-15);
        let f = state_fidelity(&PureState::h().density(), &DensityMatrix::maximally_mixed(2))
            .unwrap();
        assert_close(f, 0.5, 1e-14);
        assert!(state_fidelity(&rho, &DensityMatrix::maximally_mixed(4)).is_err());
    }

    #[test]
    fn fidelity_of_pure_states_is_overlap() {
        let a = PureState::linear(20.0);
        let b = PureState::r();
        let f = state_fidelity(&a.density(), &b.density()).unwrap();
        assert_close(f, a.inner(&b).norm_sqr(), 1e-12);
    }

    #[test]
    fn closed_form_2x2_eigenvalues() {
        assert_eq!(eigvals_hermitian_2x2(1.0, 1.0, 0.0), (1.0, 1.0));
        let (a, b) = eigvals_hermitian_2x2(0.7, 0.3, 0.1);
        assert_close(a, 0.723_606_797_749_979, 1e-12);
        assert_close(b, 0.276_393_202_250_021, 1e-12);
    }

    #[test]
    fn binary_entropy_values() {
        assert_close(binary_entropy(0.5), 1.0, 1e-15);
        assert_close(binary_entropy(0.0), 0.0, 1e-15);
        assert_close(binary_entropy(0.2), 0.721_928_094_887_362_3, 1e-12);
    }
}
