//! Process tomography with the probe set `{H, V, D, R}` used both as inputs
//! and as projectors, and maximum-likelihood reconstruction of χ through the
//! lower-triangular factor `T` with `χ = T†T / Tr(T†T)`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::channel::{apply_linear, chi_from_probe_outputs, pauli, trace_preserving_completion, ChiMatrix};
use crate::optim::{bfgs, BfgsOptions};
use crate::qstate::linalg::ZERO;
use crate::qstate::{uhlmann_fidelity, CMatrix, PureState};
use crate::stats::{poisson_sample, stream_rng};
use crate::{Error, Result};

pub const PROBE_LABELS: [&str; 4] = ["H", "V", "D", "R"];
pub const DEFAULT_RESTARTS: usize = 8;

/// `φ₁..φ₄ = |H⟩, |V⟩, |D⟩, |R⟩`.
pub fn probes() -> [PureState; 4] {
    [PureState::h(), PureState::v(), PureState::d(), PureState::r()]
}

pub type ProbTable = [[f64; 4]; 4];

/// `p_ij = ⟨φ_j|E(|φ_i⟩⟨φ_i|)|φ_j⟩`. Works for non-trace-preserving maps.
pub fn ideal_probabilities(chi: &ChiMatrix) -> ProbTable {
    probabilities_of(chi.matrix())
}

fn probabilities_of(chi: &CMatrix) -> ProbTable {
    let ps = probes();
    let mut p = [[0.0; 4]; 4];
    for (i, phi_i) in ps.iter().enumerate() {
        let out = apply_linear(chi, phi_i.density().matrix());
        for (j, phi_j) in ps.iter().enumerate() {
            let a = phi_j.amplitudes();
            let v = out.apply(a);
            p[i][j] = a.iter().zip(&v).map(|(x, y)| x.conj() * y).sum::<Complex64>().re;
        }
    }
    p
}

/// Coincidence counts for input `i` and projector `j`, with the
/// normalization `C` of the likelihood cost.
#[derive(Clone, Debug, PartialEq)]
pub struct CountsTable {
    counts: [[f64; 4]; 4],
    normalization: f64,
    seed: Option<u64>,
}

impl CountsTable {
    pub fn new(counts: [[f64; 4]; 4], normalization: f64, seed: Option<u64>) -> Result<Self> {
        if counts.iter().flatten().any(|c| !(*c >= 0.0) || !c.is_finite()) {
            return Err(Error::Parse("counts must be finite and non-negative".into()));
        }
        if !(normalization > 0.0) || !normalization.is_finite() {
            return Err(Error::Parse(format!(
                "normalization must be positive, got {normalization}"
            )));
        }
        Ok(Self {
            counts,
            normalization,
            seed,
        })
    }

    pub fn counts(&self) -> &[[f64; 4]; 4] {
        &self.counts
    }

    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn flat(&self) -> Vec<f64> {
        self.counts.iter().flatten().copied().collect()
    }

    /// Rebuilds a table from 16 row-major cells, keeping `C` and the seed.
    pub fn with_flat(&self, cells: &[f64]) -> Result<Self> {
        if cells.len() != 16 {
            return Err(Error::Dimension {
                expected: 16,
                found: cells.len(),
            });
        }
        let counts = std::array::from_fn(|i| std::array::from_fn(|j| cells[4 * i + j]));
        Self::new(counts, self.normalization, self.seed)
    }

    /// Table whose `C` is the mean number of events per input in the
    /// `{H, V}` projector pair: `(c_HH + c_HV + c_VH + c_VV)/2`. Used for
    /// post-selected outputs whose overall rate is unknown.
    pub fn self_normalized(counts: [[f64; 4]; 4], seed: Option<u64>) -> Result<Self> {
        let c = 0.5 * (counts[0][0] + counts[0][1] + counts[1][0] + counts[1][1]);
        Self::new(counts, c, seed)
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!("# normalization={:.16e}", self.normalization);
        if let Some(seed) = self.seed {
            s.push_str(&format!(" seed={seed}"));
        }
        s.push_str("\ninput,projector,count\n");
        for i in 0..4 {
            for j in 0..4 {
                s.push_str(&format!(
                    "{},{},{}\n",
                    PROBE_LABELS[i], PROBE_LABELS[j], self.counts[i][j]
                ));
            }
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut normalization = None;
        let mut seed = None;
        let mut counts = [[f64::NAN; 4]; 4];
        let mut header = false;
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(meta) = line.strip_prefix('#') {
                for kv in meta.split_whitespace() {
                    let (k, v) = kv
                        .split_once('=')
                        .ok_or_else(|| Error::Parse(format!("line {}: bad metadata {kv:?}", n + 1)))?;
                    match k {
                        "normalization" => {
                            normalization = Some(v.parse::<f64>().map_err(|e| {
                                Error::Parse(format!("line {}: normalization: {e}", n + 1))
                            })?)
                        }
                        "seed" => {
                            seed = Some(v.parse::<u64>().map_err(|e| {
                                Error::Parse(format!("line {}: seed: {e}", n + 1))
                            })?)
                        }
                        _ => {
                            return Err(Error::Parse(format!("line {}: unknown key {k:?}", n + 1)))
                        }
                    }
                }
                continue;
            }
            if !header {
                if line != "input,projector,count" {
                    return Err(Error::Parse(format!("line {}: expected header", n + 1)));
                }
                header = true;
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 3 {
                return Err(Error::Parse(format!("line {}: expected 3 fields", n + 1)));
            }
            let idx = |s: &str| {
                PROBE_LABELS
                    .iter()
                    .position(|l| *l == s)
                    .ok_or_else(|| Error::Parse(format!("line {}: unknown probe {s:?}", n + 1)))
            };
            let (i, j) = (idx(fields[0])?, idx(fields[1])?);
            if !counts[i][j].is_nan() {
                return Err(Error::Parse(format!("line {}: duplicate cell", n + 1)));
            }
            counts[i][j] = fields[2]
                .parse()
                .map_err(|e| Error::Parse(format!("line {}: count: {e}", n + 1)))?;
        }
        if counts.iter().flatten().any(|c| c.is_nan()) {
            return Err(Error::Parse("missing cells in counts table".into()));
        }
        let normalization =
            normalization.ok_or_else(|| Error::Parse("missing normalization metadata".into()))?;
        Self::new(counts, normalization, seed)
    }
}

/// Poisson counts with means `shots·p_ij`, `C = shots`.
pub fn simulate_counts(chi: &ChiMatrix, shots: u64, seed: u64) -> Result<CountsTable> {
    simulate_raw_counts(chi.matrix(), shots, seed, 0).and_then(|c| CountsTable::new(c, shots as f64, Some(seed)))
}

/// Poisson counts of an arbitrary (possibly non-TP) map on RNG stream
/// `stream`.
pub fn simulate_raw_counts(chi: &CMatrix, shots: u64, seed: u64, stream: u64) -> Result<[[f64; 4]; 4]> {
    if shots == 0 {
        return Err(Error::InvalidParameter("shots must be at least 1".into()));
    }
    let p = probabilities_of(chi);
    let mut rng = stream_rng(seed, stream);
    let mut c = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            c[i][j] = poisson_sample(shots as f64 * p[i][j].max(0.0), &mut rng)? as f64;
        }
    }
    Ok(c)
}

/// Exact expected counts `shots·p_ij`.
pub fn noiseless_counts(chi: &ChiMatrix, shots: f64) -> Result<CountsTable> {
    let p = ideal_probabilities(chi);
    let c = std::array::from_fn(|i| std::array::from_fn(|j| shots * p[i][j].max(0.0)));
    CountsTable::new(c, shots, None)
}

/// The sixteen real parameters of `T`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TParams(pub [f64; 16]);

/// Positions of the complex sub-diagonal entries, in parameter order
/// `(t5 + i t6), (t7 + i t8), …`.
const OFF_DIAGONAL: [(usize, usize); 6] = [(1, 0), (2, 1), (3, 2), (2, 0), (3, 1), (3, 0)];

impl TParams {
    pub fn t_matrix(&self) -> CMatrix {
        let t = &self.0;
        let mut m = CMatrix::zeros(4);
        for k in 0..4 {
            m[(k, k)] = Complex64::new(t[k], 0.0);
        }
        for (k, &(r, c)) in OFF_DIAGONAL.iter().enumerate() {
            m[(r, c)] = Complex64::new(t[4 + 2 * k], t[5 + 2 * k]);
        }
        m
    }

    pub fn from_t_matrix(m: &CMatrix) -> Self {
        let mut t = [0.0; 16];
        for k in 0..4 {
            t[k] = m[(k, k)].re;
        }
        for (k, &(r, c)) in OFF_DIAGONAL.iter().enumerate() {
            t[4 + 2 * k] = m[(r, c)].re;
            t[5 + 2 * k] = m[(r, c)].im;
        }
        Self(t)
    }
}

pub fn t_to_chi(t: &TParams) -> Result<ChiMatrix> {
    let tm = t.t_matrix();
    let a = &tm.adjoint() * &tm;
    let s = a.trace().re;
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::Degenerate("T†T has zero trace".into()));
    }
    ChiMatrix::new(a.scale_real(1.0 / s))
}

/// Lower-triangular `T` with `T†T = χ + εI` (renormalised), via Cholesky of
/// the index-reversed matrix.
pub fn chi_to_t(chi: &CMatrix, epsilon: f64) -> Result<TParams> {
    let reg = &chi.hermitian_part() + &CMatrix::identity(4).scale_real(epsilon);
    let reg = reg.scale_real(1.0 / reg.trace().re);
    let rev = DMatrix::from_fn(4, 4, |i, j| reg[(3 - i, 3 - j)]);
    let l = rev
        .cholesky()
        .ok_or_else(|| Error::Degenerate("χ is not positive definite".into()))?
        .unpack();
    // T = J L† J
    let t = CMatrix::from_fn(4, |i, j| l[(3 - j, 3 - i)].conj());
    Ok(TParams::from_t_matrix(&t))
}

/// `N_ij` with `p_ij = Tr(χ N_ij)`: `N[n][m] = conj(a_n) a_m`,
/// `a_m = ⟨φ_j|E_m|φ_i⟩`.
fn design_matrices() -> Vec<CMatrix> {
    let ps = probes();
    let e: Vec<CMatrix> = (0..4).map(pauli).collect();
    let mut out = Vec::with_capacity(16);
    for phi_i in &ps {
        for phi_j in &ps {
            let a: Vec<Complex64> = e
                .iter()
                .map(|em| {
                    let v = em.apply(phi_i.amplitudes());
                    phi_j
                        .amplitudes()
                        .iter()
                        .zip(&v)
                        .map(|(x, y)| x.conj() * y)
                        .sum()
                })
                .collect();
            out.push(CMatrix::from_fn(4, |n, m| a[n].conj() * a[m]));
        }
    }
    out
}

/// Likelihood cost `f(t) = Σ (c_ij − C p_ij)² / C` with its analytic
/// gradient.
pub struct Likelihood {
    design: Vec<CMatrix>,
    counts: Vec<f64>,
    c: f64,
}

impl Likelihood {
    pub fn new(counts: &CountsTable) -> Self {
        Self {
            design: design_matrices(),
            counts: counts.flat(),
            c: counts.normalization(),
        }
    }

    fn probabilities(&self, chi: &CMatrix) -> Vec<f64> {
        self.design
            .iter()
            .map(|n| {
                let mut s = ZERO;
                for a in 0..4 {
                    for b in 0..4 {
                        s += chi[(a, b)] * n[(b, a)];
                    }
                }
                s.re
            })
            .collect()
    }

    pub fn cost(&self, t: &TParams) -> f64 {
        let tm = t.t_matrix();
        let a = &tm.adjoint() * &tm;
        let s = a.trace().re;
        let p = self.probabilities(&a.scale_real(1.0 / s));
        self.counts
            .iter()
            .zip(&p)
            .map(|(c, p)| (c - self.c * p).powi(2))
            .sum::<f64>()
            / self.c
    }

    pub fn cost_and_gradient(&self, t: &TParams) -> (f64, [f64; 16]) {
        let tm = t.t_matrix();
        let a = &tm.adjoint() * &tm;
        let s = a.trace().re;
        if !(s > 0.0) {
            return (f64::INFINITY, [0.0; 16]);
        }
        let chi = a.scale_real(1.0 / s);
        let p = self.probabilities(&chi);
        let mut f = 0.0;
        let mut g = CMatrix::zeros(4);
        for ((c, p), n) in self.counts.iter().zip(&p).zip(&self.design) {
            let r = c - self.c * p;
            f += r * r;
            g = &g + &n.scale_real(-2.0 * r);
        }
        let f = f / self.c;
        // df = Tr(G dχ) = Tr(H dA), dA = dT†T + T†dT ⇒ df = 2 Re Tr(H T† dT)
        let tr_ga = (&g * &a).trace().re;
        let h = &g.scale_real(1.0 / s) - &CMatrix::identity(4).scale_real(tr_ga / (s * s));
        let k = &h * &tm.adjoint();
        let mut grad = [0.0; 16];
        for d in 0..4 {
            grad[d] = 2.0 * k[(d, d)].re;
        }
        for (idx, &(r, c)) in OFF_DIAGONAL.iter().enumerate() {
            grad[4 + 2 * idx] = 2.0 * k[(c, r)].re;
            grad[5 + 2 * idx] = -2.0 * k[(c, r)].im;
        }
        (f, grad)
    }
}

pub fn likelihood_cost(t: &TParams, counts: &CountsTable) -> f64 {
    Likelihood::new(counts).cost(t)
}

/// Unnormalised χ from relative frequencies `c_ij / C` by exact inversion.
pub fn linear_inversion(counts: &CountsTable) -> CMatrix {
    let c = counts.counts();
    let outs: [CMatrix; 4] = std::array::from_fn(|i| {
        let f: Vec<f64> = c[i].iter().map(|x| x / counts.normalization()).collect();
        let (ph, pv, pd, pr) = (f[0], f[1], f[2], f[3]);
        // ρ = (s0 I + sx X + sy Y + sz Z)/2 with ⟨φ|ρ|φ⟩ = (s0 + s·n_φ)/2
        let s0 = ph + pv;
        let sz = ph - pv;
        let sx = 2.0 * pd - s0;
        let sy = s0 - 2.0 * pr;
        CMatrix::from_vec(
            2,
            vec![
                Complex64::new(0.5 * (s0 + sz), 0.0),
                Complex64::new(0.5 * sx, -0.5 * sy),
                Complex64::new(0.5 * sx, 0.5 * sy),
                Complex64::new(0.5 * (s0 - sz), 0.0),
            ],
        )
        .unwrap()
    });
    chi_from_probe_outputs(&outs)
}

/// Nearest positive semidefinite, unit-trace matrix (spectrum clipped at 0).
fn psd_projection(m: &CMatrix) -> CMatrix {
    let p = m.map_spectrum(|x| x.max(0.0));
    let tr = p.trace().re;
    if tr > 0.0 {
        p.scale_real(1.0 / tr)
    } else {
        CMatrix::identity(4).scale_real(0.25)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MlOptions {
    pub restarts: usize,
    pub seed: u64,
    /// Complete the estimate to a trace-preserving map. Disable for
    /// post-selected processes.
    pub trace_preserving: bool,
    pub bfgs: BfgsOptions,
}

impl Default for MlOptions {
    fn default() -> Self {
        Self {
            restarts: DEFAULT_RESTARTS,
            seed: 0,
            trace_preserving: true,
            bfgs: BfgsOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReconstructedProcess {
    pub chi: ChiMatrix,
    /// Cost at the likelihood optimum.
    pub cost: f64,
    pub iterations: usize,
    pub converged: bool,
    pub restart: usize,
    pub t: TParams,
}

/// Regularisation added to the linear-inversion start so that it has a
/// Cholesky factor.
const INIT_EPSILON: f64 = 1e-6;
const PERTURBATION: f64 = 0.1;

pub fn reconstruct_ml(counts: &CountsTable, opts: &MlOptions) -> Result<ReconstructedProcess> {
    let restarts = opts.restarts.max(1);
    let lik = Likelihood::new(counts);
    let start = chi_to_t(&psd_projection(&linear_inversion(counts)), INIT_EPSILON)?;
    let rms = (start.0.iter().map(|x| x * x).sum::<f64>() / 16.0).sqrt();

    let mut best: Option<(usize, crate::optim::Minimum)> = None;
    for r in 0..restarts {
        let mut x0 = start.0;
        if r > 0 {
            let mut rng = stream_rng(opts.seed, r as u64);
            for v in x0.iter_mut() {
                let z: f64 = StandardNormal.sample(&mut rng);
                *v += PERTURBATION * rms * z;
            }
        }
        let m = bfgs(
            |x| {
                let (f, g) = lik.cost_and_gradient(&TParams(x.try_into().unwrap()));
                (f, g.to_vec())
            },
            &x0,
            &opts.bfgs,
        );
        let better = match &best {
            None => true,
            Some((_, b)) => m.f < b.f,
        };
        if better {
            best = Some((r, m));
        }
    }
    let (restart, m) = best.expect("at least one restart");
    let t = TParams(m.x.as_slice().try_into().unwrap());
    let mut chi = t_to_chi(&t)?;
    if opts.trace_preserving {
        chi = trace_preserving_completion(&chi)?;
    }
    let result = ReconstructedProcess {
        chi,
        cost: m.f,
        iterations: m.iterations,
        converged: m.converged,
        restart,
        t,
    };
    if !result.converged {
        return Err(Error::NonConvergence {
            restarts,
            best: Box::new(result),
        });
    }
    Ok(result)
}

/// Uhlmann fidelity of two χ matrices.
pub fn process_fidelity(a: &ChiMatrix, b: &ChiMatrix) -> Result<f64> {
    uhlmann_fidelity(a.matrix(), b.matrix())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{dephasing_channel, Axis};

    #[test]
    fn identity_probability_table() {
        let p = ideal_probabilities(&ChiMatrix::identity());
        let expect = [
            [1.0, 0.0, 0.5, 0.5],
            [0.0, 1.0, 0.5, 0.5],
            [0.5, 0.5, 1.0, 0.5],
            [0.5, 0.5, 0.5, 1.0],
        ];
        for i in 0..4 {
            for j in 0..4 {
                assert!((p[i][j] - expect[i][j]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn dephasing_mixes_h() {
        let p = ideal_probabilities(&dephasing_channel(ZERO, Axis::X).unwrap());
        assert!((p[0][0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn t_to_chi_examples() {
        let mut t = [0.0; 16];
        t[0] = 1.0;
        assert_eq!(t_to_chi(&TParams(t)).unwrap(), ChiMatrix::identity());
        t[1] = 1.0;
        let chi = t_to_chi(&TParams(t)).unwrap();
        assert!(chi.matrix().max_abs_diff(&CMatrix::diagonal(&[0.5, 0.5, 0.0, 0.0])) < 1e-15);
        assert!(matches!(t_to_chi(&TParams([0.0; 16])), Err(Error::Degenerate(_))));
    }

    #[test]
    fn chi_to_t_inverts() {
        let mut t = [0.0; 16];
        for (k, v) in t.iter_mut().enumerate() {
            *v = 0.1 * (k as f64 + 1.0).sin();
        }
        for v in t.iter_mut().take(4) {
            *v = v.abs() + 0.2;
        }
        let chi = t_to_chi(&TParams(t)).unwrap();
        let back = chi_to_t(chi.matrix(), 0.0).unwrap();
        let chi2 = t_to_chi(&back).unwrap();
        assert!(chi.matrix().max_abs_diff(chi2.matrix()) < 1e-12);
    }

    #[test]
    fn cost_zero_on_exact_counts_and_quadratic_in_counts() {
        let mut t = [0.0; 16];
        t[0] = 0.9;
        t[1] = 0.3;
        t[6] = 0.2;
        let chi = t_to_chi(&TParams(t)).unwrap();
        let counts = noiseless_counts(&chi, 1e6).unwrap();
        let f0 = likelihood_cost(&TParams(t), &counts);
        assert!(f0 < 1e-18);
        let mut cells = counts.flat();
        cells[5] += 30.0;
        let f1 = likelihood_cost(&TParams(t), &counts.with_flat(&cells).unwrap());
        assert!((f1 - f0 - 900.0 / 1e6).abs() < 1e-9);
    }

    #[test]
    fn linear_inversion_is_exact_on_noiseless_counts() {
        let chi = dephasing_channel(Complex64::new(0.3, 0.4), Axis::Y).unwrap();
        let counts = noiseless_counts(&chi, 1e5).unwrap();
        assert!(linear_inversion(&counts).max_abs_diff(chi.matrix()) < 1e-12);
    }

    #[test]
    fn ml_recovers_identity_and_dephasing() {
        let id = ChiMatrix::identity();
        let r = reconstruct_ml(&noiseless_counts(&id, 1e6).unwrap(), &MlOptions::default()).unwrap();
        assert!(process_fidelity(&r.chi, &id).unwrap() >= 1.0 - 1e-6);
        assert!(r.chi.report().passed());

        let deph = dephasing_channel(ZERO, Axis::X).unwrap();
        let r = reconstruct_ml(&noiseless_counts(&deph, 1e6).unwrap(), &MlOptions::default()).unwrap();
        assert!((r.chi.get(0, 0).re - 0.5).abs() < 1e-4);
        assert!((r.chi.get(1, 1).re - 0.5).abs() < 1e-4);
    }

    #[test]
    fn fidelity_identity_vs_dephasing() {
        let f = process_fidelity(&ChiMatrix::identity(), &dephasing_channel(ZERO, Axis::X).unwrap())
            .unwrap();
        assert!((f - 0.5).abs() < 1e-12);
    }

    #[test]
    fn simulate_counts_is_deterministic() {
        let chi = ChiMatrix::identity();
        let a = simulate_counts(&chi, 1_000_000, 5).unwrap();
        let b = simulate_counts(&chi, 1_000_000, 5).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.counts()[0][1], 0.0);
    }

    #[test]
    fn csv_round_trip() {
        let chi = dephasing_channel(Complex64::new(0.5, 0.1), Axis::Z).unwrap();
        let t = simulate_counts(&chi, 1000, 17).unwrap();
        let back = CountsTable::from_csv(&t.to_csv()).unwrap();
        assert_eq!(back, t);
        assert!(CountsTable::from_csv("input,projector,count\nH,H,1\n").is_err());
    }

    #[test]
    fn counts_reject_negative() {
        let mut c = [[1.0; 4]; 4];
        c[2][2] = -1.0;
        assert!(CountsTable::new(c, 1.0, None).is_err());
        assert!(CountsTable::new([[1.0; 4]; 4], 0.0, None).is_err());
    }
}
