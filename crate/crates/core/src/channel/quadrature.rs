//! Averages over the Gaussian photon spectrum.
//!
//! With `x = 2(ω − ω₀)/σ` the spectral density becomes `e^{−x²}/√π`, so
//! fixed grids are Gauss-Hermite rules or, for strongly oscillating
//! integrands, a trapezoid rule on a truncated line. An adaptive
//! Gauss-Kronrod integrator is provided as an independent reference.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::fiber::SpectralProfile;

/// Gauss-Hermite nodes and weights for `∫ e^{−x²} g(x) dx`. Nodes start from
/// the eigenvalues of the Jacobi matrix and are polished by Newton steps on
/// the orthonormal Hermite recurrence. Nodes ascend.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    const PIM4: f64 = 0.751_125_544_464_942_5;
    assert!(n >= 1, "need at least one node");
    let jacobi = nalgebra::DMatrix::<f64>::from_fn(n, n, |i, j| {
        if i.abs_diff(j) == 1 {
            (i.max(j) as f64 / 2.0).sqrt()
        } else {
            0.0
        }
    });
    let mut guess: Vec<f64> = jacobi.symmetric_eigenvalues().iter().copied().collect();
    guess.sort_by(f64::total_cmp);
    let nf = n as f64;
    // (p_n(z), p_n'(z)) for the orthonormal family
    let eval = |z: f64| {
        let mut p1 = PIM4;
        let mut p2 = 0.0;
        for j in 0..n {
            let p3 = p2;
            p2 = p1;
            let jf = j as f64;
            p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
        }
        (p1, (2.0 * nf).sqrt() * p2)
    };
    let mut x = Vec::with_capacity(n);
    let mut w = Vec::with_capacity(n);
    for z0 in guess {
        let mut z = z0;
        for _ in 0..8 {
            let (p, dp) = eval(z);
            let step = p / dp;
            z -= step;
            if step.abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        let (_, dp) = eval(z);
        x.push(z);
        w.push(2.0 / (dp * dp));
    }
    (x, w)
}

/// Quadrature nodes `(ω, weight)` for averaging against a spectral profile;
/// weights sum to one.
#[derive(Clone, Debug, PartialEq)]
pub struct FrequencyGrid {
    pub omega: Vec<f64>,
    pub weight: Vec<f64>,
    /// Reduced coordinate `x = 2(ω − ω₀)/σ` of each node.
    pub x: Vec<f64>,
}

/// Truncation of the reduced coordinate for trapezoid grids.
const X_MAX: f64 = 7.0;

impl FrequencyGrid {
    pub fn gauss_hermite(profile: &SpectralProfile, n: usize) -> Self {
        let (x, w) = gauss_hermite(n);
        let norm = PI.sqrt();
        Self {
            omega: x.iter().map(|&x| profile.omega_at(x)).collect(),
            weight: w.iter().map(|&w| w / norm).collect(),
            x,
        }
    }

    /// Uniform grid on `|x| ≤ 7` with spacing `h`.
    pub fn trapezoid(profile: &SpectralProfile, n: usize) -> Self {
        let n = n.max(3) | 1;
        let h = 2.0 * X_MAX / (n - 1) as f64;
        let x: Vec<f64> = (0..n).map(|k| -X_MAX + h * k as f64).collect();
        let raw: Vec<f64> = x.iter().map(|&x| h * (-x * x).exp() / PI.sqrt()).collect();
        Self {
            omega: x.iter().map(|&x| profile.omega_at(x)).collect(),
            weight: raw,
            x,
        }
    }

    /// Gauss-Hermite with `nodes` points when it resolves phases `e^{iκω}`
    /// with `|κ| ≤ max_kappa`; otherwise a trapezoid grid fine enough for
    /// that oscillation (at least `nodes` points).
    pub fn adapted(profile: &SpectralProfile, nodes: usize, max_kappa: f64) -> Self {
        let a = max_kappa.abs() * profile.sigma / 2.0;
        if a <= 0.5 * (2.0 * nodes as f64).sqrt() {
            return Self::gauss_hermite(profile, nodes);
        }
        let h = 2.0 * PI / (a + 12.0);
        let needed = (2.0 * X_MAX / h).ceil() as usize + 1;
        Self::trapezoid(profile, needed.max(nodes))
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weight.iter().sum()
    }

    pub fn average(&self, g: impl Fn(f64) -> Complex64) -> Complex64 {
        self.omega
            .iter()
            .zip(&self.weight)
            .map(|(&om, &w)| g(om) * w)
            .sum()
    }
}

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_2,
    0.063_092_092_629_979_0,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728,
];
const G_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_87,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn kronrod_15(g: &impl Fn(f64) -> Complex64, a: f64, b: f64) -> (Complex64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = g(c);
    let mut k = fc * GK_WEIGHTS[7];
    let mut gs = fc * G_WEIGHTS[3];
    for i in 0..7 {
        let dx = h * GK_NODES[i];
        let s = g(c - dx) + g(c + dx);
        k += s * GK_WEIGHTS[i];
        if i % 2 == 1 {
            gs += s * G_WEIGHTS[i / 2];
        }
    }
    (k * h, ((k - gs) * h).norm())
}

/// Upper bound on panels kept by [`integrate`].
const MAX_PANELS: usize = 200_000;

struct Panel {
    lo: f64,
    hi: f64,
    val: Complex64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err.total_cmp(&other.err).is_eq()
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Globally adaptive Gauss-Kronrod (7/15) integral of `g` over `[a, b]`:
/// the panel with the largest error estimate is bisected until the summed
/// estimate drops below `tol` (or the panel budget is spent).
pub fn integrate(g: impl Fn(f64) -> Complex64, a: f64, b: f64, tol: f64) -> Complex64 {
    let panel = |lo: f64, hi: f64| {
        let (val, err) = kronrod_15(&g, lo, hi);
        Panel { lo, hi, val, err }
    };
    let mut heap = std::collections::BinaryHeap::new();
    let first = panel(a, b);
    let mut total_err = first.err;
    heap.push(first);
    while total_err > tol && heap.len() < MAX_PANELS {
        let worst = heap.pop().expect("non-empty");
        let mid = 0.5 * (worst.lo + worst.hi);
        let (l, r) = (panel(worst.lo, mid), panel(mid, worst.hi));
        total_err += l.err + r.err - worst.err;
        heap.push(l);
        heap.push(r);
    }
    // sum in position order so the result does not depend on heap layout
    let mut panels = heap.into_vec();
    panels.sort_by(|p, q| p.lo.total_cmp(&q.lo));
    panels.iter().map(|p| p.val).sum()
}

/// `∫ e^{−x²}/√π · g(x) dx` over `|x| ≤ 12` by adaptive quadrature.
pub fn gaussian_integral(g: impl Fn(f64) -> Complex64, tol: f64) -> Complex64 {
    let norm = PI.sqrt();
    integrate(|x| g(x) * ((-x * x).exp() / norm), -12.0, 12.0, tol)
}

/// `∫ f(ω) g(ω) dω` for the Gaussian profile.
pub fn spectral_integral(profile: &SpectralProfile, g: impl Fn(f64) -> Complex64, tol: f64) -> Complex64 {
    gaussian_integral(|x| g(profile.omega_at(x)), tol)
}

/// `∫ f(ω) e^{iκω} dω` with the carrier phase `e^{iκω₀}` factored out, so
/// that long fibers do not lose precision in `κω`.
pub fn spectral_phase_average(profile: &SpectralProfile, kappa: f64, tol: f64) -> Complex64 {
    let a = 0.5 * kappa * profile.sigma;
    Complex64::from_polar(1.0, kappa * profile.omega0)
        * gaussian_integral(|x| Complex64::from_polar(1.0, a * x), tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_weights_sum_to_sqrt_pi() {
        for n in [1, 2, 5, 16, 64, 128, 256] {
            let (x, w) = gauss_hermite(n);
            let s: f64 = w.iter().sum();
            assert!((s - PI.sqrt()).abs() < 1e-12, "n={n} sum={s}");
            assert!(x.windows(2).all(|p| p[0] < p[1]));
        }
    }

    #[test]
    fn hermite_integrates_moments() {
        let (x, w) = gauss_hermite(20);
        let m2: f64 = x.iter().zip(&w).map(|(x, w)| w * x * x).sum();
        let m4: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(4)).sum();
        assert!((m2 - PI.sqrt() / 2.0).abs() < 1e-13);
        assert!((m4 - 0.75 * PI.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn hermite_resolves_cosine() {
        // ∫ e^{−x²} cos(ax) dx = √π e^{−a²/4}
        let (x, w) = gauss_hermite(128);
        let a = 8.0;
        let v: f64 = x.iter().zip(&w).map(|(x, w)| w * (a * x).cos()).sum();
        assert!((v - PI.sqrt() * (-a * a / 4.0).exp()).abs() < 1e-12);
    }

    #[test]
    fn kronrod_integrates_gaussian() {
        let v = integrate(|x| Complex64::new((-x * x).exp(), 0.0), -10.0, 10.0, 1e-14);
        assert!((v.re - PI.sqrt()).abs() < 1e-13);
    }
}
