use std::f64::consts::PI;

use fiberchan::qstate::linalg::ZERO;
use fiberchan::qstate::random::{random_density_matrix, random_pure_state, random_state_param, random_unitary};
use fiberchan::qstate::{
    eigvals_hermitian_2x2, partial_trace, purify, state_fidelity, state_from_params, von_neumann_entropy, CMatrix,
    DensityMatrix, StateParam, Subsystem,
};
use fiberchan::stats::stream_rng;
use num_complex::Complex64;
use proptest::prelude::*;

fn param() -> impl Strategy<Value = StateParam> {
    (0.0..=1.0f64, 0.0..PI, 0.0..2.0 * PI).prop_map(|(l, t, f)| StateParam::new(l, t, f).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn entropy_within_bounds(seed in any::<u64>(), dim in prop::sample::select(vec![2usize, 4])) {
        let rho = random_density_matrix(dim, &mut stream_rng(seed, 0));
        let s = von_neumann_entropy(&rho).unwrap();
        prop_assert!(s >= -1e-12);
        prop_assert!(s <= (dim as f64).log2() + 1e-12);
    }

    #[test]
    fn pure_states_have_zero_entropy(seed in any::<u64>()) {
        let psi = random_pure_state(4, &mut stream_rng(seed, 0));
        prop_assert!(von_neumann_entropy(&psi.density()).unwrap().abs() < 1e-9);
    }

    #[test]
    fn entropy_is_unitarily_invariant(seed in any::<u64>()) {
        let mut rng = stream_rng(seed, 0);
        let rho = random_density_matrix(2, &mut rng);
        let u = random_unitary(2, &mut rng);
        let rotated = u.matmul(rho.matrix()).matmul(&u.adjoint());
        let rotated = DensityMatrix::new(rotated).unwrap();
        let (a, b) = (von_neumann_entropy(&rho).unwrap(), von_neumann_entropy(&rotated).unwrap());
        prop_assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn purification_traces_back(p in param()) {
        let joint = purify(&p).density();
        prop_assert!(joint.eigenvalues().iter().filter(|&&e| e > 1e-9).count() == 1);
        let reduced = partial_trace(&joint, Subsystem::Second).unwrap();
        prop_assert!(reduced.matrix().max_abs_diff(state_from_params(&p).matrix()) < 1e-12);
        // both marginals of a pure state share a spectrum
        let other = partial_trace(&joint, Subsystem::First).unwrap();
        let (a, b) = (von_neumann_entropy(&reduced).unwrap(), von_neumann_entropy(&other).unwrap());
        prop_assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn state_params_give_the_prescribed_spectrum(p in param()) {
        let rho = state_from_params(&p);
        let mut ev = rho.eigenvalues();
        ev.sort_by(f64::total_cmp);
        let mut want = [p.lambda0, p.lambda1()];
        want.sort_by(f64::total_cmp);
        prop_assert!((ev[0] - want[0]).abs() < 1e-12 && (ev[1] - want[1]).abs() < 1e-12);
        let (psi, perp) = p.basis();
        let overlap = psi[0].conj() * perp[0] + psi[1].conj() * perp[1];
        prop_assert!(overlap.norm() < 1e-15);
    }

    #[test]
    fn closed_form_2x2_matches_solver(a in -2.0..2.0f64, b in -2.0..2.0f64, re in -2.0..2.0f64, im in -2.0..2.0f64) {
        let c = Complex64::new(re, im);
        let m = CMatrix::from_vec(2, vec![Complex64::new(a, 0.0), c, c.conj(), Complex64::new(b, 0.0)]).unwrap();
        let mut ev = m.eigvalsh();
        ev.sort_by(f64::total_cmp);
        let (hi, lo) = eigvals_hermitian_2x2(a, b, c.norm());
        prop_assert!((hi - ev[1]).abs() < 1e-12 && (lo - ev[0]).abs() < 1e-12);
    }

    #[test]
    fn fidelity_is_symmetric_and_bounded(seed in any::<u64>()) {
        let mut rng = stream_rng(seed, 0);
        let rho = random_density_matrix(2, &mut rng);
        let sigma = random_density_matrix(2, &mut rng);
        let f = state_fidelity(&rho, &sigma).unwrap();
        let g = state_fidelity(&sigma, &rho).unwrap();
        prop_assert!((f - g).abs() < 1e-9);
        prop_assert!((-1e-12..=1.0 + 1e-9).contains(&f));
        prop_assert!((state_fidelity(&rho, &rho).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn fidelity_of_pure_states_is_squared_overlap(seed in any::<u64>()) {
        let mut rng = stream_rng(seed, 0);
        let a = random_pure_state(2, &mut rng);
        let b = random_pure_state(2, &mut rng);
        let f = state_fidelity(&a.density(), &b.density()).unwrap();
        prop_assert!((f - a.inner(&b).norm_sqr()).abs() < 1e-9);
    }

    #[test]
    fn tensor_products_trace_to_factors(seed in any::<u64>()) {
        let mut rng = stream_rng(seed, 0);
        let a = random_density_matrix(2, &mut rng);
        let b = random_density_matrix(2, &mut rng);
        let ab = a.tensor(&b);
        prop_assert!(partial_trace(&ab, Subsystem::Second).unwrap().matrix().max_abs_diff(a.matrix()) < 1e-12);
        prop_assert!(partial_trace(&ab, Subsystem::First).unwrap().matrix().max_abs_diff(b.matrix()) < 1e-12);
    }
}

#[test]
fn maximally_mixed_entropy_is_one_bit_per_qubit() {
    assert!((von_neumann_entropy(&DensityMatrix::maximally_mixed(2)).unwrap() - 1.0).abs() < 1e-12);
    assert!((von_neumann_entropy(&DensityMatrix::maximally_mixed(4)).unwrap() - 2.0).abs() < 1e-12);
}

#[test]
fn non_hermitian_input_rejected() {
    let m = CMatrix::from_vec(2, vec![Complex64::new(0.5, 0.0), Complex64::new(0.1, 0.0), ZERO, Complex64::new(0.5, 0.0)])
        .unwrap();
    assert!(DensityMatrix::new(m).is_err());
}

#[test]
fn random_params_are_valid() {
    let mut rng = stream_rng(11, 0);
    for _ in 0..1000 {
        let p = random_state_param(&mut rng);
        assert!(StateParam::new(p.lambda0, p.theta, p.phi).is_ok());
    }
}
