//! Qubit channels in the Pauli χ representation
//! `E(ρ) = Σ_mn χ_mn E_m ρ E_n†` with `E = (I, X, Y, Z)`, plus Kraus sets,
//! composition, mixing and the dephasing family produced by birefringent
//! fiber.

pub mod fiber;
pub mod quadrature;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::qstate::linalg::{I, ONE, ZERO};
use crate::qstate::random::gaussian_complex;
use crate::qstate::{CMatrix, DensityMatrix};
use crate::{Error, Result};

pub const PAULI_LABELS: [&str; 4] = ["I", "X", "Y", "Z"];

pub const HERMITIAN_TOL: f64 = 1e-10;
pub const PSD_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-9;
pub const TP_TOL: f64 = 1e-8;
/// Defects beyond this are hard errors; between the pass tolerances and
/// this bound the diagnostic report carries a warning.
pub const HARD_TOL: f64 = 1e-6;

/// Pauli matrix `E_k` in the order I, X, Y, Z.
pub fn pauli(k: usize) -> CMatrix {
    match k {
        0 => CMatrix::identity(2),
        1 => CMatrix::from_vec(2, vec![ZERO, ONE, ONE, ZERO]).unwrap(),
        2 => CMatrix::from_vec(2, vec![ZERO, -I, I, ZERO]).unwrap(),
        3 => CMatrix::diagonal(&[1.0, -1.0]),
        _ => panic!("Pauli index {k} out of range"),
    }
}

fn paulis() -> [CMatrix; 4] {
    [pauli(0), pauli(1), pauli(2), pauli(3)]
}

/// Eigenbasis selector for dephasing channels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    /// Unitary whose columns are the `+1` and `−1` eigenvectors.
    pub fn eigenbasis(self) -> CMatrix {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let r = Complex64::new(s, 0.0);
        match self {
            Axis::Z => CMatrix::identity(2),
            Axis::X => CMatrix::from_vec(2, vec![r, r, r, -r]).unwrap(),
            Axis::Y => CMatrix::from_vec(2, vec![r, r, I * s, -I * s]).unwrap(),
        }
    }
}

impl std::str::FromStr for Axis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "X" | "x" => Ok(Axis::X),
            "Y" | "y" => Ok(Axis::Y),
            "Z" | "z" => Ok(Axis::Z),
            _ => Err(Error::Parse(format!("unknown axis {s:?}"))),
        }
    }
}

/// Outcome class of [`is_cptp`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CptpStatus {
    Pass,
    Warn,
    Fail,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CptpReport {
    pub hermiticity_defect: f64,
    pub min_eigenvalue: f64,
    pub trace_defect: f64,
    /// Largest entry of `Σ χ_mn E_n†E_m − I`.
    pub tp_defect: f64,
    pub status: CptpStatus,
}

impl CptpReport {
    pub fn passed(&self) -> bool {
        self.status == CptpStatus::Pass
    }
}

/// `A = Σ χ_mn E_n† E_m`; equals the identity for trace-preserving χ.
pub fn tp_operator(chi: &CMatrix) -> CMatrix {
    let e = paulis();
    let mut a = CMatrix::zeros(2);
    for m in 0..4 {
        for n in 0..4 {
            let c = chi[(m, n)];
            if c == ZERO {
                continue;
            }
            a = &a + &(&e[n] * &e[m]).scale(c);
        }
    }
    a
}

/// Diagnostic CP/TP check of an arbitrary 4×4 matrix.
pub fn is_cptp(chi: &CMatrix) -> CptpReport {
    if chi.dim() != 4 {
        return CptpReport {
            hermiticity_defect: f64::INFINITY,
            min_eigenvalue: f64::NEG_INFINITY,
            trace_defect: f64::INFINITY,
            tp_defect: f64::INFINITY,
            status: CptpStatus::Fail,
        };
    }
    let hermiticity_defect = chi.hermiticity_defect();
    let min_eigenvalue = chi.eigvalsh()[0];
    let trace_defect = (chi.trace() - ONE).norm();
    let tp_defect = tp_operator(chi).max_abs_diff(&CMatrix::identity(2));
    let pass = hermiticity_defect <= HERMITIAN_TOL
        && min_eigenvalue >= -PSD_TOL
        && trace_defect <= TRACE_TOL
        && tp_defect <= TP_TOL;
    let soft = hermiticity_defect <= HARD_TOL
        && min_eigenvalue >= -HARD_TOL
        && trace_defect <= HARD_TOL
        && tp_defect <= HARD_TOL;
    let status = if pass {
        CptpStatus::Pass
    } else if soft {
        CptpStatus::Warn
    } else {
        CptpStatus::Fail
    };
    CptpReport {
        hermiticity_defect,
        min_eigenvalue,
        trace_defect,
        tp_defect,
        status,
    }
}

/// Process matrix in the Pauli basis: Hermitian, positive semidefinite and
/// unit trace. Trace preservation is checked by [`is_cptp`], since
/// conditional (post-selected) processes are legitimately non-TP.
#[derive(Clone, Debug, PartialEq)]
pub struct ChiMatrix(CMatrix);

impl ChiMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        if m.dim() != 4 {
            return Err(Error::Dimension {
                expected: 4,
                found: m.dim(),
            });
        }
        let defect = m.hermiticity_defect();
        if defect > HERMITIAN_TOL {
            return Err(Error::InvalidChannel(format!(
                "chi is not Hermitian (defect {defect:e})"
            )));
        }
        let m = m.hermitian_part();
        let tr = m.trace().re;
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidChannel(format!("chi has trace {tr}")));
        }
        let min = m.eigvalsh()[0];
        if min < -PSD_TOL {
            return Err(Error::InvalidChannel(format!(
                "chi is not positive semidefinite (min eigenvalue {min:e})"
            )));
        }
        Ok(Self(m))
    }

    /// Like [`ChiMatrix::new`] but additionally requires trace preservation.
    pub fn channel(m: CMatrix) -> Result<Self> {
        let chi = Self::new(m)?;
        chi.require_channel()?;
        Ok(chi)
    }

    pub fn identity() -> Self {
        let mut m = CMatrix::zeros(4);
        m[(0, 0)] = ONE;
        Self(m)
    }

    /// Single Pauli process `ρ ↦ E_k ρ E_k`.
    pub fn pauli(k: usize) -> Self {
        let mut m = CMatrix::zeros(4);
        m[(k, k)] = ONE;
        Self(m)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn get(&self, m: usize, n: usize) -> Complex64 {
        self.0[(m, n)]
    }

    pub fn report(&self) -> CptpReport {
        is_cptp(&self.0)
    }

    pub fn require_channel(&self) -> Result<CptpReport> {
        let r = self.report();
        if r.status == CptpStatus::Fail {
            return Err(Error::InvalidChannel(format!(
                "not trace preserving (defect {:e})",
                r.tp_defect
            )));
        }
        Ok(r)
    }

    pub fn kraus(&self) -> KrausSet {
        kraus_from_chi(self)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChiDoc {
    dim: usize,
    re: Vec<f64>,
    im: Vec<f64>,
    basis: Vec<String>,
}

impl Serialize for ChiMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let doc = crate::qstate::MatrixDoc::from(&self.0);
        ChiDoc {
            dim: doc.dim,
            re: doc.re,
            im: doc.im,
            basis: PAULI_LABELS.iter().map(|s| s.to_string()).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ChiMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let doc = ChiDoc::deserialize(d)?;
        if doc.basis != PAULI_LABELS {
            return Err(D::Error::custom(format!(
                "unsupported basis {:?}, expected [\"I\",\"X\",\"Y\",\"Z\"]",
                doc.basis
            )));
        }
        let m = CMatrix::try_from(crate::qstate::MatrixDoc {
            dim: doc.dim,
            re: doc.re,
            im: doc.im,
        })
        .map_err(D::Error::custom)?;
        ChiMatrix::new(m).map_err(D::Error::custom)
    }
}

/// Operator-sum representation `ρ ↦ Σ K ρ K†`.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausSet {
    ops: Vec<CMatrix>,
}

impl KrausSet {
    pub fn new(ops: Vec<CMatrix>) -> Result<Self> {
        if ops.is_empty() {
            return Err(Error::InvalidChannel("empty Kraus set".into()));
        }
        if let Some(k) = ops.iter().find(|k| k.dim() != 2) {
            return Err(Error::Dimension {
                expected: 2,
                found: k.dim(),
            });
        }
        let set = Self { ops };
        let defect = set.completeness_defect();
        if defect > HERMITIAN_TOL {
            return Err(Error::InvalidChannel(format!(
                "Kraus completeness violated by {defect:e}"
            )));
        }
        Ok(set)
    }

    pub fn operators(&self) -> &[CMatrix] {
        &self.ops
    }

    pub fn completeness_defect(&self) -> f64 {
        let mut sum = CMatrix::zeros(2);
        for k in &self.ops {
            sum = &sum + &(&k.adjoint() * k);
        }
        sum.max_abs_diff(&CMatrix::identity(2))
    }

    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(rho.dim());
        for k in &self.ops {
            out = &out + &(&(k * rho) * &k.adjoint());
        }
        out
    }

    /// Random CPTP map with `n_ops` Kraus operators, from the isometry
    /// obtained by orthonormalising a Gaussian `2n × 2` matrix.
    pub fn random<R: Rng + ?Sized>(n_ops: usize, rng: &mut R) -> Self {
        let rows = 2 * n_ops;
        loop {
            let mut cols: Vec<Vec<Complex64>> = Vec::with_capacity(2);
            for _ in 0..2 {
                let mut v: Vec<Complex64> = (0..rows).map(|_| gaussian_complex(rng)).collect();
                for c in &cols {
                    let overlap: Complex64 = c.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                    for (x, y) in v.iter_mut().zip(c) {
                        *x -= overlap * y;
                    }
                }
                let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                v.iter_mut().for_each(|z| *z /= norm);
                cols.push(v);
            }
            if cols.iter().flatten().any(|z| !z.is_finite()) {
                continue;
            }
            let ops = (0..n_ops)
                .map(|k| CMatrix::from_fn(2, |i, j| cols[j][2 * k + i]))
                .collect();
            return Self { ops };
        }
    }
}

/// Random CPTP χ with up to four Kraus operators.
pub fn random_channel<R: Rng + ?Sized>(rng: &mut R) -> ChiMatrix {
    let n = rng.random_range(1..=4);
    chi_from_kraus(&KrausSet::random(n, rng))
}

/// Pauli coefficients `a_m = Tr(E_m K)/2` of a 2×2 operator.
pub fn pauli_coefficients(k: &CMatrix) -> [Complex64; 4] {
    let e = paulis();
    std::array::from_fn(|m| (&e[m] * k).trace() * 0.5)
}

pub fn chi_from_kraus(k: &KrausSet) -> ChiMatrix {
    let coeffs: Vec<[Complex64; 4]> = k.ops.iter().map(pauli_coefficients).collect();
    let m = CMatrix::from_fn(4, |m, n| coeffs.iter().map(|a| a[m] * a[n].conj()).sum());
    let m = m.hermitian_part();
    let tr = m.trace().re;
    ChiMatrix(m.scale_real(1.0 / tr))
}

/// Canonical Kraus operators from the eigendecomposition of χ. For a non-TP
/// χ the set reproduces the linear map but is not complete.
pub fn kraus_from_chi(chi: &ChiMatrix) -> KrausSet {
    let e = paulis();
    let (vals, vecs) = chi.0.eigh();
    let mut ops = Vec::new();
    for (k, &l) in vals.iter().enumerate().rev() {
        if l <= 1e-15 {
            continue;
        }
        let s = l.sqrt();
        let mut op = CMatrix::zeros(2);
        for (m, em) in e.iter().enumerate() {
            op = &op + &em.scale(vecs[(m, k)] * s);
        }
        ops.push(op);
    }
    KrausSet { ops }
}

/// `Σ χ_mn E_m ρ E_n†` without any validation; `rho` may be any 2×2
/// operator.
pub fn apply_linear(chi: &CMatrix, rho: &CMatrix) -> CMatrix {
    let e = paulis();
    let left: Vec<CMatrix> = e.iter().map(|em| em * rho).collect();
    let mut out = CMatrix::zeros(2);
    for m in 0..4 {
        for n in 0..4 {
            let c = chi[(m, n)];
            if c == ZERO {
                continue;
            }
            out = &out + &(&left[m] * &e[n]).scale(c);
        }
    }
    out
}

/// `(E ⊗ id)(ρ_AB)` without validation.
pub fn apply_on_first_linear(chi: &CMatrix, rho: &CMatrix) -> CMatrix {
    let id = CMatrix::identity(2);
    let e: Vec<CMatrix> = paulis().iter().map(|p| p.kron(&id)).collect();
    let left: Vec<CMatrix> = e.iter().map(|em| em * rho).collect();
    let mut out = CMatrix::zeros(4);
    for m in 0..4 {
        for n in 0..4 {
            let c = chi[(m, n)];
            if c == ZERO {
                continue;
            }
            out = &out + &(&left[m] * &e[n]).scale(c);
        }
    }
    out
}

pub fn apply_chi(chi: &ChiMatrix, rho: &DensityMatrix) -> Result<DensityMatrix> {
    if rho.dim() != 2 {
        return Err(Error::Dimension {
            expected: 2,
            found: rho.dim(),
        });
    }
    let report = chi.require_channel()?;
    let out = apply_linear(&chi.0, rho.matrix());
    DensityMatrix::with_tolerance(out, 1e-9 + 4.0 * report.tp_defect)
}

/// `E₂ ∘ E₁`: `first` acts on the input, `second` on its output.
pub fn compose(first: &ChiMatrix, second: &ChiMatrix) -> ChiMatrix {
    let (k1, k2) = (kraus_from_chi(first), kraus_from_chi(second));
    let mut ops = Vec::with_capacity(k1.ops.len() * k2.ops.len());
    for b in &k2.ops {
        for a in &k1.ops {
            ops.push(b * a);
        }
    }
    chi_from_kraus(&KrausSet { ops })
}

/// Unitary process `ρ ↦ U ρ U†`.
pub fn unitary_chi(u: &CMatrix) -> Result<ChiMatrix> {
    Ok(chi_from_kraus(&KrausSet::new(vec![u.clone()])?))
}

/// Rescales a CP map into the nearest-in-spirit trace-preserving one,
/// `K ↦ K A^{-1/2}` with `A = Σ K†K`.
pub fn trace_preserving_completion(chi: &ChiMatrix) -> Result<ChiMatrix> {
    let a = tp_operator(&chi.0);
    let (vals, _) = a.eigh();
    if vals[0] < 1e-12 {
        return Err(Error::InvalidChannel(format!(
            "cannot complete to a trace-preserving map: Σ K†K has eigenvalue {:e}",
            vals[0]
        )));
    }
    let inv_root = a.map_spectrum(|x| 1.0 / x.sqrt());
    let ops = kraus_from_chi(chi).ops.iter().map(|k| k * &inv_root).collect();
    Ok(chi_from_kraus(&KrausSet { ops }))
}

/// Channel multiplying the off-diagonal element of the `axis` eigenbasis by
/// `gamma`: a phase rotation by `arg Γ` followed by real dephasing `|Γ|`.
pub fn dephasing_channel(gamma: Complex64, axis: Axis) -> Result<ChiMatrix> {
    let g = gamma.norm();
    if !g.is_finite() || g > 1.0 + 1e-12 {
        return Err(Error::InvalidCoherence(g));
    }
    let g = g.min(1.0);
    let phase = CMatrix::from_vec(2, vec![ONE, ZERO, ZERO, Complex64::from_polar(1.0, -gamma.arg())])
        .unwrap();
    let w = axis.eigenbasis();
    let rotate = |k: CMatrix| &(&w * &k) * &w.adjoint();
    let k0 = rotate(phase.scale_real(((1.0 + g) / 2.0).sqrt()));
    let k1 = rotate((&pauli(3) * &phase).scale_real(((1.0 - g) / 2.0).sqrt()));
    Ok(chi_from_kraus(&KrausSet { ops: vec![k0, k1] }))
}

/// Convex combination `Σ p_i χ_i`.
pub fn mix_channels(parts: &[(f64, ChiMatrix)]) -> Result<ChiMatrix> {
    if parts.is_empty() {
        return Err(Error::ProbabilitySum(0.0));
    }
    let total: f64 = parts.iter().map(|(p, _)| p).sum();
    if (total - 1.0).abs() > 1e-9 || parts.iter().any(|(p, _)| *p < 0.0) {
        return Err(Error::ProbabilitySum(total));
    }
    let mut m = CMatrix::zeros(4);
    for (p, chi) in parts {
        m = &m + &chi.0.scale_real(*p);
    }
    ChiMatrix::new(m)
}

/// Pauli χ of the linear map whose action on `|i⟩⟨j|` is `act(i, j)`, via
/// the Choi matrix `J = Σ |i⟩⟨j| ⊗ E(|i⟩⟨j|)` and `χ_mn = ⟨v_m|J|v_n⟩/4`
/// with `v_m = (I ⊗ E_m)|Ω⟩`. The result is not normalised.
pub fn chi_from_action(act: impl Fn(usize, usize) -> CMatrix) -> CMatrix {
    let mut choi = CMatrix::zeros(4);
    for i in 0..2 {
        for j in 0..2 {
            let out = act(i, j);
            for k in 0..2 {
                for l in 0..2 {
                    choi[(2 * i + k, 2 * j + l)] = out[(k, l)];
                }
            }
        }
    }
    let v: Vec<Vec<Complex64>> = paulis()
        .iter()
        .map(|e| {
            let mut v = vec![ZERO; 4];
            for i in 0..2 {
                for k in 0..2 {
                    v[2 * i + k] = e[(k, i)];
                }
            }
            v
        })
        .collect();
    CMatrix::from_fn(4, |m, n| {
        let jv = choi.apply(&v[n]);
        v[m].iter().zip(&jv).map(|(a, b)| a.conj() * b).sum::<Complex64>() * 0.25
    })
}

/// Unnormalised χ of a linear map given its outputs on the probe states
/// `|H⟩, |V⟩, |D⟩, |R⟩` with `R = (H − iV)/√2`.
pub fn chi_from_probe_outputs(outputs: &[CMatrix; 4]) -> CMatrix {
    let [h, v, d, r] = outputs;
    // |0⟩⟨1| = ρ_D − iρ_R − (1 − i)(ρ_H + ρ_V)/2
    let hv = &h.clone() + v;
    let off = &(d - &r.scale(I)) - &hv.scale(Complex64::new(0.5, -0.5));
    let off_dag = off.adjoint();
    chi_from_action(|i, j| match (i, j) {
        (0, 0) => h.clone(),
        (1, 1) => v.clone(),
        (0, 1) => off.clone(),
        _ => off_dag.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::random::random_density_matrix;
    use crate::qstate::PureState;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_chi_is_identity_map() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rho = random_density_matrix(2, &mut rng);
        let out = apply_chi(&ChiMatrix::identity(), &rho).unwrap();
        assert!(out.matrix().max_abs_diff(rho.matrix()) < 1e-15);
    }

    #[test]
    fn half_x_mixture() {
        let mut m = CMatrix::zeros(4);
        m[(0, 0)] = Complex64::new(0.5, 0.0);
        m[(1, 1)] = Complex64::new(0.5, 0.0);
        let chi = ChiMatrix::channel(m).unwrap();
        let d = PureState::d().density();
        let out = apply_chi(&chi, &d).unwrap();
        assert!(out.matrix().max_abs_diff(d.matrix()) < 1e-15);
        let out = apply_chi(&chi, &PureState::h().density()).unwrap();
        assert!(out.matrix().max_abs_diff(&CMatrix::diagonal(&[0.5, 0.5])) < 1e-15);
    }

    #[test]
    fn chi_from_kraus_examples() {
        let chi = chi_from_kraus(&KrausSet::new(vec![CMatrix::identity(2)]).unwrap());
        assert_eq!(chi, ChiMatrix::identity());
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let k = KrausSet::new(vec![pauli(0).scale_real(s), pauli(1).scale_real(s)]).unwrap();
        let chi = chi_from_kraus(&k);
        assert!((chi.get(0, 0).re - 0.5).abs() < 1e-15);
        assert!((chi.get(1, 1).re - 0.5).abs() < 1e-15);
        assert!(chi.get(0, 1).norm() < 1e-15);
    }

    #[test]
    fn kraus_set_rejects_incomplete() {
        assert!(KrausSet::new(vec![CMatrix::identity(2).scale_real(0.9)]).is_err());
    }

    #[test]
    fn cptp_report_flags_negative_eigenvalue() {
        assert!(is_cptp(ChiMatrix::identity().matrix()).passed());
        let mut m = CMatrix::zeros(4);
        m[(0, 0)] = Complex64::new(1.2, 0.0);
        m[(1, 1)] = Complex64::new(-0.2, 0.0);
        let r = is_cptp(&m);
        assert_eq!(r.status, CptpStatus::Fail);
        assert!(r.min_eigenvalue < -0.1);
        assert!(ChiMatrix::new(m).is_err());
    }

    #[test]
    fn cptp_report_warns_on_small_defect() {
        let mut m = ChiMatrix::identity().matrix().clone();
        m[(0, 0)] = Complex64::new(1.0 - 1e-7, 0.0);
        m[(3, 3)] = Complex64::new(1e-7, 0.0);
        assert!(is_cptp(&m).passed());
        m[(0, 3)] = Complex64::new(1e-7, 0.0);
        m[(3, 0)] = Complex64::new(1e-7, 0.0);
        // a real χ_IZ term breaks trace preservation by 2e-7
        assert_eq!(is_cptp(&m).status, CptpStatus::Warn);
    }

    #[test]
    fn dephasing_examples() {
        assert!(dephasing_channel(ONE, Axis::X)
            .unwrap()
            .matrix()
            .max_abs_diff(ChiMatrix::identity().matrix())
            < 1e-15);

        let chi = dephasing_channel(ZERO, Axis::X).unwrap();
        let mut expect = CMatrix::zeros(4);
        expect[(0, 0)] = Complex64::new(0.5, 0.0);
        expect[(1, 1)] = Complex64::new(0.5, 0.0);
        assert!(chi.matrix().max_abs_diff(&expect) < 1e-15);

        let chi = dephasing_channel(Complex64::new(0.5, 0.0), Axis::Z).unwrap();
        assert!((chi.get(0, 0).re - 0.75).abs() < 1e-15);
        assert!((chi.get(3, 3).re - 0.25).abs() < 1e-15);
        let out = apply_chi(&chi, &PureState::d().density()).unwrap();
        assert!((out.matrix()[(0, 1)].re - 0.25).abs() < 1e-15);

        assert!(matches!(
            dephasing_channel(Complex64::new(0.8, 0.8), Axis::Z),
            Err(Error::InvalidCoherence(_))
        ));
    }

    #[test]
    fn mix_examples() {
        let id = ChiMatrix::identity();
        let m = mix_channels(&[(0.5, id.clone()), (0.5, id.clone())]).unwrap();
        assert!(m.matrix().max_abs_diff(id.matrix()) < 1e-15);
        assert_eq!(mix_channels(&[(1.0, id.clone())]).unwrap(), id);
        assert!(matches!(
            mix_channels(&[(0.5, id.clone()), (0.4, id)]),
            Err(Error::ProbabilitySum(_))
        ));
    }

    #[test]
    fn probe_inversion_recovers_chi() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let chi = random_channel(&mut rng);
            let probes = [PureState::h(), PureState::v(), PureState::d(), PureState::r()];
            let outs = probes.map(|p| apply_linear(chi.matrix(), p.density().matrix()));
            let back = chi_from_probe_outputs(&outs);
            assert!(back.max_abs_diff(chi.matrix()) < 1e-12);
        }
    }

    #[test]
    fn completion_is_trace_preserving() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let chi = random_channel(&mut rng);
        // shrink the map on |V⟩ by post-composing with a filter
        let filter = CMatrix::diagonal(&[1.0, 0.6]);
        let ops = kraus_from_chi(&chi).operators().iter().map(|k| &filter * k).collect();
        let lossy = chi_from_kraus(&KrausSet { ops });
        assert!(!lossy.report().passed());
        let fixed = trace_preserving_completion(&lossy).unwrap();
        assert!(fixed.report().passed());
    }

    #[test]
    fn chi_json_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let chi = random_channel(&mut rng);
        let text = serde_json::to_string(&chi).unwrap();
        assert!(text.contains("\"basis\":[\"I\",\"X\",\"Y\",\"Z\"]"));
        let back: ChiMatrix = serde_json::from_str(&text).unwrap();
        assert_eq!(back, chi);
    }
}
