use fiberchan::channel::fiber::{
    coherence_length, decoherence_fiber_length, fiber_channel, single_fiber_gamma, FiberParams, SpectralProfile,
};
use fiberchan::channel::quadrature::{gauss_hermite, spectral_integral, FrequencyGrid};
use fiberchan::channel::{
    apply_chi, apply_linear, chi_from_kraus, compose, dephasing_channel, kraus_from_chi, mix_channels, random_channel,
    trace_preserving_completion, unitary_chi, Axis, ChiMatrix,
};
use fiberchan::qstate::random::{random_density_matrix, random_unitary};
use fiberchan::qstate::{CMatrix, DensityMatrix};
use fiberchan::stats::stream_rng;
use num_complex::Complex64;
use proptest::prelude::*;

fn spectrum() -> SpectralProfile {
    SpectralProfile::from_wavelength(800.0, 3.0).unwrap()
}

fn axis() -> impl Strategy<Value = Axis> {
    prop::sample::select(vec![Axis::X, Axis::Y, Axis::Z])
}

fn in_basis(w: &CMatrix, m: &CMatrix) -> CMatrix {
    w.adjoint().matmul(m).matmul(w)
}

#[test]
fn random_channels_preserve_trace_and_positivity() {
    let mut rng = stream_rng(2024, 0);
    for _ in 0..1000 {
        let chi = random_channel(&mut rng);
        assert!(chi.require_channel().is_ok());
        let rho = random_density_matrix(2, &mut rng);
        let out = apply_chi(&chi, &rho).unwrap();
        assert!((out.matrix().trace().re - 1.0).abs() < 1e-9);
        assert!(out.eigenvalues().iter().all(|&e| e > -1e-9));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn dephasing_scales_the_coherence_exactly(re in -0.7..0.7f64, im in -0.7..0.7f64, ax in axis(), seed in any::<u64>()) {
        let gamma = Complex64::new(re, im);
        let chi = dephasing_channel(gamma, ax).unwrap();
        let rho = random_density_matrix(2, &mut stream_rng(seed, 0));
        let out = apply_linear(chi.matrix(), rho.matrix());
        let w = ax.eigenbasis();
        let (a, b) = (in_basis(&w, rho.matrix()), in_basis(&w, &out));
        prop_assert!((b[(0, 1)] - gamma * a[(0, 1)]).norm() < 1e-12);
        prop_assert!((b[(1, 0)] - gamma.conj() * a[(1, 0)]).norm() < 1e-12);
        prop_assert!((b[(0, 0)] - a[(0, 0)]).norm() < 1e-12);
        prop_assert!((b[(1, 1)] - a[(1, 1)]).norm() < 1e-12);
    }

    #[test]
    fn dephasing_is_unital(g in 0.0..=1.0f64, ax in axis()) {
        let chi = dephasing_channel(Complex64::new(g, 0.0), ax).unwrap();
        let half = CMatrix::identity(2).scale_real(0.5);
        prop_assert!(apply_linear(chi.matrix(), &half).max_abs_diff(&half) < 1e-14);
    }

    #[test]
    fn mixing_is_linear(p in 0.0..=1.0f64, seed in any::<u64>()) {
        let mut rng = stream_rng(seed, 0);
        let (a, b) = (random_channel(&mut rng), random_channel(&mut rng));
        let rho = random_density_matrix(2, &mut rng);
        let mixed = mix_channels(&[(p, a.clone()), (1.0 - p, b.clone())]).unwrap();
        let lhs = apply_linear(mixed.matrix(), rho.matrix());
        let rhs = &apply_linear(a.matrix(), rho.matrix()).scale_real(p)
            + &apply_linear(b.matrix(), rho.matrix()).scale_real(1.0 - p);
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-12);
        prop_assert!(mixed.require_channel().is_ok());
    }

    #[test]
    fn composition_applies_in_order(seed in any::<u64>()) {
        let mut rng = stream_rng(seed, 0);
        let (a, b) = (random_channel(&mut rng), random_channel(&mut rng));
        let rho = random_density_matrix(2, &mut rng);
        let step = apply_linear(b.matrix(), &apply_linear(a.matrix(), rho.matrix()));
        prop_assert!(apply_linear(compose(&a, &b).matrix(), rho.matrix()).max_abs_diff(&step) < 1e-12);
    }

    #[test]
    fn kraus_round_trip(seed in any::<u64>()) {
        let chi = random_channel(&mut stream_rng(seed, 0));
        let k = kraus_from_chi(&chi);
        prop_assert!(k.completeness_defect() < 1e-9);
        prop_assert!(chi_from_kraus(&k).matrix().max_abs_diff(chi.matrix()) < 1e-12);
        let rho = random_density_matrix(2, &mut stream_rng(seed, 1));
        prop_assert!(k.apply(rho.matrix()).max_abs_diff(&apply_linear(chi.matrix(), rho.matrix())) < 1e-12);
    }

    #[test]
    fn unitary_channels_are_rank_one(seed in any::<u64>()) {
        let u = random_unitary(2, &mut stream_rng(seed, 0));
        let chi = unitary_chi(&u).unwrap();
        let ev = chi.matrix().eigvalsh();
        prop_assert!((ev.iter().cloned().fold(f64::MIN, f64::max) - 1.0).abs() < 1e-10);
        prop_assert!((chi.matrix().trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn completion_leaves_channels_alone(seed in any::<u64>()) {
        let chi = random_channel(&mut stream_rng(seed, 0));
        let done = trace_preserving_completion(&chi).unwrap();
        prop_assert!(done.matrix().max_abs_diff(chi.matrix()) < 1e-9);
    }

    #[test]
    fn fiber_gamma_matches_quadrature(length in 0.001..1.2f64) {
        let s = spectrum();
        let f = FiberParams::new(length, 3.5e-4).unwrap();
        let kappa = f.kappa();
        let carrier = Complex64::from_polar(1.0, kappa * s.omega0);
        let direct = carrier * spectral_integral(&s, |w| Complex64::from_polar(1.0, kappa * (w - s.omega0)), 1e-12);
        let g = single_fiber_gamma(&f, &s).value();
        prop_assert!((g - direct).norm() < 1e-9, "L={length}: {g} vs {direct}");
    }
}

#[test]
fn fiber_gamma_matches_gauss_hermite_sum() {
    let s = spectrum();
    let (x, w) = gauss_hermite(128);
    for length in [0.05, 0.2, 0.4] {
        let f = FiberParams::new(length, 3.5e-4).unwrap();
        let kappa = f.kappa();
        let sum: Complex64 = x
            .iter()
            .zip(&w)
            .map(|(&x, &w)| Complex64::from_polar(w / std::f64::consts::PI.sqrt(), kappa * s.omega_at(x)))
            .sum();
        assert!((sum - single_fiber_gamma(&f, &s).value()).norm() < 1e-9);
    }
    let grid = FrequencyGrid::gauss_hermite(&s, 128);
    assert!((grid.total_weight() - 1.0).abs() < 1e-12);
}

#[test]
fn coherence_numbers() {
    let dl = coherence_length(800.0, 3.0).unwrap();
    assert!((dl - 213.0).abs() / 213.0 < 0.01);
    let l = decoherence_fiber_length(dl, 3.5e-4).unwrap();
    assert!((l - 0.61).abs() / 0.61 < 0.01);
}

#[test]
fn long_fibers_dephase_completely() {
    let s = spectrum();
    let f = FiberParams::new(120.0, 3.5e-4).unwrap();
    assert!(single_fiber_gamma(&f, &s).magnitude() < 1e-300);
    let chi = fiber_channel(&f, &s, Axis::Z).unwrap();
    let full = dephasing_channel(Complex64::new(0.0, 0.0), Axis::Z).unwrap();
    assert!(chi.matrix().max_abs_diff(full.matrix()) < 1e-15);
}

#[test]
fn coherence_decays_with_length() {
    let s = spectrum();
    let mut last = 1.0;
    for i in 1..40 {
        let f = FiberParams::new(0.05 * i as f64, 3.5e-4).unwrap();
        let g = single_fiber_gamma(&f, &s).magnitude();
        assert!(g < last);
        last = g;
    }
}

#[test]
fn fiber_axis_swaps_basis() {
    // Z dephasing leaves |H⟩ alone, X dephasing leaves |D⟩ alone.
    let s = spectrum();
    let f = FiberParams::new(2.0, 3.5e-4).unwrap();
    let h = DensityMatrix::new(CMatrix::diagonal(&[1.0, 0.0])).unwrap();
    let d = DensityMatrix::new(CMatrix::from_real_rows(&[&[0.5, 0.5], &[0.5, 0.5]])).unwrap();
    let z = fiber_channel(&f, &s, Axis::Z).unwrap();
    let x = fiber_channel(&f, &s, Axis::X).unwrap();
    assert!(apply_chi(&z, &h).unwrap().matrix().max_abs_diff(h.matrix()) < 1e-12);
    assert!(apply_chi(&x, &d).unwrap().matrix().max_abs_diff(d.matrix()) < 1e-12);
    assert!(apply_chi(&ChiMatrix::identity(), &d).unwrap().matrix().max_abs_diff(d.matrix()) < 1e-15);
}
