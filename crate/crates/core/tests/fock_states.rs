use std::f64::consts::{FRAC_PI_2, PI};

use freelight::fock::{coherent_state, displacement_matrix, hermiticity_defect, min_eigenvalue};
use freelight::{fidelity, trace_distance, Complex64 as C64, Error, Observable, PhotonicState, TargetState};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn fock(n: usize, dim: usize) -> PhotonicState {
    let mut v = DVector::zeros(dim);
    v[n] = C64::new(1.0, 0.0);
    PhotonicState::Pure(v)
}

fn poisson(beta0: f64, n_max: usize) -> PhotonicState {
    let v = coherent_state(C64::new(beta0, 0.0), n_max);
    let rho = DMatrix::from_fn(n_max + 1, n_max + 1, |i, j| if i == j { C64::new(v[i].norm_sqr(), 0.0) } else { C64::default() });
    PhotonicState::mixed_normalized(rho).unwrap()
}

#[test]
fn purity_examples() {
    assert!((fock(3, 8).purity() - 1.0).abs() < 1e-15);
    // Σ (e^{-1}/n!)² from an arbitrary-precision evaluation
    assert!((poisson(1.0, 40).purity() - 0.30850832255367105).abs() < 1e-12);
}

#[test]
fn mixed_validation_rejects_bad_matrices() {
    let mut rho = DMatrix::<C64>::identity(2, 2) * C64::new(0.5, 0.0);
    rho[(0, 1)] = C64::new(0.1, 0.0);
    assert!(PhotonicState::mixed_normalized(rho.clone()).is_err());
    rho[(1, 0)] = C64::new(0.1, 0.0);
    assert!(PhotonicState::mixed_normalized(rho.clone()).is_ok());
    rho[(0, 1)] = C64::new(0.9, 0.0);
    rho[(1, 0)] = C64::new(0.9, 0.0);
    assert!(matches!(PhotonicState::mixed_normalized(rho), Err(Error::InvalidState(_))));
}

#[test]
fn fidelity_examples() {
    let even = TargetState::Cat { alpha: C64::new(2.0, 0.0), theta: 0.0 }.state(40).unwrap();
    let odd = TargetState::Cat { alpha: C64::new(2.0, 0.0), theta: PI }.state(40).unwrap();
    assert!(fidelity(&even, &odd).unwrap() < 1e-20);
    assert!((fidelity(&even, &even).unwrap() - 1.0).abs() < 1e-13);
    let mixed = PhotonicState::mixed_normalized(even.density()).unwrap();
    assert!((fidelity(&even, &mixed).unwrap() - 1.0).abs() < 1e-12);
    assert!((fidelity(&mixed, &mixed).unwrap() - 1.0).abs() < 1e-9);
    assert!(matches!(fidelity(&fock(0, 3), &fock(0, 4)), Err(Error::DimensionMismatch { .. })));
}

#[test]
fn trace_distance_examples() {
    assert!((trace_distance(&fock(0, 4), &fock(1, 4)).unwrap() - 1.0).abs() < 1e-12);
    assert!(trace_distance(&fock(2, 4), &fock(2, 4)).unwrap() < 1e-14);
}

#[test]
fn expectations_of_coherent_state() {
    let alpha = C64::from_polar(1.3, 0.4);
    let state = PhotonicState::pure_normalized(coherent_state(alpha, 60)).unwrap();
    assert!((state.expectation(Observable::Annihilation) - alpha).norm() < 1e-12);
    assert!((state.expectation(Observable::Number).re - 1.69).abs() < 1e-12);
    assert!((state.expectation(Observable::PairCorrelation).re - 1.69 * 1.69).abs() < 1e-11);
}

/// `W(α) = (2/π) Tr[ρ D(α) Π D(α)†]` with `D` from a matrix exponential in a
/// larger space, independent of the Laguerre ladder.
fn wigner_bruteforce(state: &PhotonicState, x: f64, p: f64) -> f64 {
    let big = 120;
    let alpha = C64::new(x, p) / 2.0_f64.sqrt();
    let mut gen = DMatrix::<C64>::zeros(big, big);
    for n in 1..big {
        let s = (n as f64).sqrt();
        gen[(n, n - 1)] = alpha * s;
        gen[(n - 1, n)] = -alpha.conj() * s;
    }
    let d = gen.exp();
    let dim = state.dim();
    let rho = state.density();
    let mut total = C64::default();
    for k in 0..big {
        let parity = if k % 2 == 0 { 1.0 } else { -1.0 };
        // ⟨k|D† ρ D|k⟩
        let col = d.column(k);
        let head = col.rows(0, dim);
        total += head.dotc(&(&rho * head)) * parity;
    }
    2.0 / PI * total.re
}

#[test]
fn wigner_reference_points() {
    let vac = fock(0, 10).wigner(&[0.0], &[0.0]).unwrap();
    assert!((vac.values[(0, 0)] - 2.0 / PI).abs() < 1e-14);
    let one = fock(1, 10).wigner(&[0.0], &[0.0]).unwrap();
    assert!((one.values[(0, 0)] + 2.0 / PI).abs() < 1e-14);

    let cat = TargetState::Cat { alpha: C64::new(2.0, 0.0), theta: FRAC_PI_2 }.state(40).unwrap();
    for &(x, p) in &[(0.0, 0.0), (2.0 * 2.0_f64.sqrt(), 0.0), (0.0, 1.1), (-1.5, 0.4)] {
        let fast = cat.wigner(&[x], &[p]).unwrap().values[(0, 0)];
        let slow = wigner_bruteforce(&cat, x, p);
        assert!((fast - slow).abs() < 1e-10, "({x}, {p}): {fast} vs {slow}");
    }
}

#[test]
fn wigner_normalization_and_negativity() {
    let cat = TargetState::Cat { alpha: C64::new(2.0, 0.0), theta: PI }.state(40).unwrap();
    let axis: Vec<f64> = (0..161).map(|i| -8.0 + 0.1 * i as f64).collect();
    let grid = cat.wigner(&axis, &axis).unwrap();
    assert!((grid.normalization() - 1.0).abs() < 0.02);
    assert!(grid.min() < -0.1);
}

#[test]
fn squeezed_marginal_is_gaussian() {
    let r = 0.5;
    let state = TargetState::SqueezedVacuum { r }.state(60).unwrap();
    let xs: Vec<f64> = (0..81).map(|i| -2.0 + 0.05 * i as f64).collect();
    let ps: Vec<f64> = (0..241).map(|i| -6.0 + 0.05 * i as f64).collect();
    let grid = state.wigner(&xs, &ps).unwrap();
    let var = (-2.0 * r).exp() / 2.0;
    let peak = 1.0 / (2.0 * PI * var).sqrt();
    for (x, m) in xs.iter().zip(grid.x_marginal()) {
        let g = (-x * x / (2.0 * var)).exp() * peak;
        assert!((m - g).abs() < 0.01 * peak, "x = {x}: {m} vs {g}");
    }
}

#[test]
fn target_examples() {
    let sq = TargetState::SqueezedVacuum { r: 0.0 }.state(10).unwrap();
    assert!((fidelity(&sq, &fock(0, 11)).unwrap() - 1.0).abs() < 1e-15);

    let sq = TargetState::SqueezedVacuum { r: 0.5 }.state(60).unwrap();
    let n = sq.expectation(Observable::Number).re;
    assert!((n - 0.5_f64.sinh().powi(2)).abs() < 1e-10);

    let cat = TargetState::Cat { alpha: C64::new(1.0, 0.0), theta: 0.0 }.state(30).unwrap();
    let pops = cat.populations();
    assert!(pops.iter().skip(1).step_by(2).all(|p| *p < 1e-30));

    let tri = TargetState::TriangularCat { alpha: C64::new(1.5, 0.0), theta: 2.0 * PI / 3.0 }.state(40).unwrap();
    for (n, p) in tri.populations().iter().enumerate() {
        if n % 3 != 0 {
            assert!(*p < 1e-28, "n = {n}");
        }
    }

    let custom = TargetState::Custom { amps: vec![C64::new(1.0, 0.0), C64::new(0.0, 1.0)] }.state(3).unwrap();
    assert!((custom.populations()[1] - 0.5).abs() < 1e-15);

    assert!(matches!(
        TargetState::Cat { alpha: C64::new(3.0, 0.0), theta: 0.0 }.state(8),
        Err(Error::TruncationTooSmall { .. })
    ));
}

#[test]
fn displacement_of_vacuum_matches_coherent_state() {
    let gamma = C64::from_polar(2.2, -0.9);
    let d = displacement_matrix(gamma, 50);
    let direct = coherent_state(gamma, 49);
    for n in 0..50 {
        assert!((d[(n, 0)] - direct[n]).norm() < 1e-13);
    }
}

fn random_density(seed: &[f64], dim: usize) -> DMatrix<C64> {
    let g = DMatrix::from_fn(dim, dim, |i, j| {
        let k = 2 * (i * dim + j);
        C64::new(seed[k % seed.len()], seed[(k + 1) % seed.len()])
    });
    let rho = &g * g.adjoint();
    let tr = rho.trace();
    rho / tr
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gram_matrices_are_valid_states(seed in prop::collection::vec(-1.0f64..1.0, 8..40), dim in 1usize..7) {
        prop_assume!(seed.iter().any(|v| v.abs() > 1e-3));
        let rho = random_density(&seed, dim);
        let state = PhotonicState::mixed_normalized(rho).unwrap();
        let m = state.density();
        prop_assert!(hermiticity_defect(&m) <= 1e-12);
        prop_assert!((m.trace().re - 1.0).abs() <= 1e-10);
        prop_assert!(min_eigenvalue(&m) >= -1e-9);
        prop_assert!(state.purity() <= 1.0 + 1e-12);
    }

    #[test]
    fn pure_and_mixed_forms_agree(re in prop::collection::vec(-1.0f64..1.0, 6), im in prop::collection::vec(-1.0f64..1.0, 6)) {
        let v = DVector::from_iterator(6, re.iter().zip(&im).map(|(a, b)| C64::new(*a, *b)));
        prop_assume!(v.norm() > 1e-3);
        let pure = PhotonicState::pure_normalized(v).unwrap();
        let mixed = PhotonicState::mixed_normalized(pure.density()).unwrap();
        prop_assert!((mixed.purity() - 1.0).abs() < 1e-10);
        let xs = [-1.0, 0.3];
        let ps = [0.0, 1.2];
        let a = pure.wigner(&xs, &ps).unwrap();
        let b = mixed.wigner(&xs, &ps).unwrap();
        prop_assert!((a.values - b.values).abs().max() < 1e-10);
    }

    #[test]
    fn coherent_state_is_finite(n_max in 0usize..300, beta in 0.0f64..10.0, phase in -PI..PI) {
        let v = coherent_state(C64::from_polar(beta, phase), n_max);
        prop_assert!(v.iter().all(|z| z.re.is_finite() && z.im.is_finite()));
    }
}
