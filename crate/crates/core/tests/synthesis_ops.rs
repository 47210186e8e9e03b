use std::f64::consts::{FRAC_PI_2, PI};

use freelight::synthesis::{fd_gradient, FD_STEP};
use freelight::{
    emit_exact, iels_modulate, objective, optimize, ring_coefficients, Complex64 as C64, IelsStage, Ring,
    RingProfile, SynthesisProblem, TargetState,
};

fn profile(rings: &[(f64, f64)], drift: f64, harmonic: u32) -> RingProfile {
    RingProfile {
        rings: rings.iter().map(|&(beta_abs, beta_phase)| Ring { beta_abs, beta_phase }).collect(),
        drift,
        harmonic,
    }
}

fn cat_problem(rings: usize) -> SynthesisProblem {
    SynthesisProblem::new(TargetState::Cat { alpha: C64::new(1.0, 0.0), theta: FRAC_PI_2 }, 1.5, rings)
}

#[test]
fn single_ring_is_iels() {
    let ring = ring_coefficients(&profile(&[(2.3, 0.7)], 0.13, 1)).unwrap();
    let stage = iels_modulate(&IelsStage::new(2.3, 0.7, 0.13)).unwrap();
    let overlap: C64 = (-30..=30).map(|l| ring.amp(l).conj() * stage.amp(l)).sum();
    assert!((overlap.norm() - 1.0).abs() < 1e-12);
}

#[test]
fn identical_rings_collapse_to_one() {
    let two = ring_coefficients(&profile(&[(1.4, 0.2), (1.4, 0.2)], 0.3, 1)).unwrap();
    let one = ring_coefficients(&profile(&[(1.4, 0.2)], 0.3, 1)).unwrap();
    for l in -20..=20 {
        assert!((two.amp(l) - one.amp(l)).norm() < 1e-14);
    }
}

#[test]
fn all_zero_profile_is_unmodulated() {
    let spec = ring_coefficients(&profile(&[(0.0, 0.0), (0.0, 1.0)], 0.2, 1)).unwrap();
    assert!((spec.amp(0).norm() - 1.0).abs() < 1e-15);
    assert!(spec.amp(1).norm() < 1e-15);
}

#[test]
fn ring_at_bessel_zero_still_normalizes() {
    // 2|β| of the first ring sits at the first zero of J_0
    let spec = ring_coefficients(&profile(&[(1.2024, 0.0), (3.0, PI)], 0.0, 1)).unwrap();
    assert!((spec.norm_sqr() - 1.0).abs() < 1e-12);
}

#[test]
fn objective_examples() {
    let flat = profile(&[(0.0, 0.0)], 0.0, 1);
    let mut vac = SynthesisProblem::new(TargetState::Custom { amps: vec![C64::new(1.0, 0.0)] }, 0.8, 1);
    vac.n_max_coeff = 0;
    assert!((objective(&flat, 0, &vac).unwrap().fidelity - 1.0).abs() < 1e-14);
    let mut one = SynthesisProblem::new(TargetState::Custom { amps: vec![C64::default(), C64::new(1.0, 0.0)] }, 0.8, 1);
    one.n_max_coeff = 1;
    let eval = objective(&flat, -1, &one).unwrap();
    assert!((eval.fidelity - 1.0).abs() < 1e-14);
    assert!((eval.p_success - 0.64 * (-0.64_f64).exp()).abs() < 1e-15);
}

#[test]
fn objective_ignores_ring_order() {
    let p = cat_problem(4);
    let rings = [(0.4, 0.1), (2.1, 1.9), (5.5, 4.0), (1.0, 3.3)];
    let base = objective(&profile(&rings, 0.37, 1), -2, &p).unwrap().fidelity;
    for perm in [[3, 2, 1, 0], [1, 0, 3, 2], [2, 3, 0, 1]] {
        let shuffled: Vec<(f64, f64)> = perm.iter().map(|&i| rings[i]).collect();
        let f = objective(&profile(&shuffled, 0.37, 1), -2, &p).unwrap().fidelity;
        assert!((f - base).abs() < 1e-12);
    }
}

#[test]
fn objective_ignores_target_phase() {
    let amps: Vec<C64> = (0..6).map(|n| C64::new(0.3 + 0.1 * n as f64, -0.2 * n as f64)).collect();
    let rotated: Vec<C64> = amps.iter().map(|a| a * C64::from_polar(1.0, 1.234)).collect();
    let mut a = SynthesisProblem::new(TargetState::Custom { amps }, 1.0, 2);
    a.n_max_coeff = 5;
    let mut b = a.clone();
    b.target = TargetState::Custom { amps: rotated };
    let prof = profile(&[(1.3, 0.5), (0.7, 2.0)], 0.21, 1);
    let fa = objective(&prof, -1, &a).unwrap().fidelity;
    let fb = objective(&prof, -1, &b).unwrap().fidelity;
    assert!((fa - fb).abs() < 1e-13);
}

#[test]
fn finite_difference_ratio_test() {
    let p = cat_problem(2);
    let f = |x: &[f64]| objective(&profile(&[(x[0], x[1]), (x[2], x[3])], x[4], 1), -1, &p).unwrap().fidelity;
    let x = [1.1, 0.4, 2.3, 5.0, 0.27];
    let h = 2e-3;
    let g1 = fd_gradient(f, &x, h);
    let g2 = fd_gradient(f, &x, h / 2.0);
    let g4 = fd_gradient(f, &x, h / 4.0);
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt();
    let ratio = dist(&g1, &g4) / dist(&g2, &g4);
    // second-order error: (1 - 1/16) / (1/4 - 1/16) = 5
    assert!((ratio - 5.0).abs() < 0.2, "ratio {ratio}");
    let g0 = fd_gradient(f, &x, FD_STEP);
    assert!(dist(&g0, &g4) < 1e-3 * (1.0 + g4.iter().map(|v| v.abs()).fold(0.0, f64::max)));
}

#[test]
fn harmonic_two_even_sideband_suppresses_odd_photons() {
    let spec = ring_coefficients(&profile(&[(1.5, 0.3), (4.0, 2.2), (0.9, 5.1)], 0.41, 2)).unwrap();
    for s in [-4, -2, 0, 2] {
        let out = emit_exact(&[spec.clone()], 1.0, &[s], Some(20)).unwrap();
        let pops = out.state.populations();
        assert!(pops.iter().skip(1).step_by(2).all(|p| *p == 0.0), "s = {s}");
    }
}

fn small(rings: usize, restarts: usize) -> SynthesisProblem {
    let mut p = cat_problem(rings);
    p.s_range = Some((-3, 0));
    p.restarts = restarts;
    p.max_iters = 40;
    p.seed = 11;
    p
}

#[test]
fn optimize_is_deterministic_and_monotone() {
    let a = optimize(&small(2, 4)).unwrap();
    let again = optimize(&small(2, 4)).unwrap();
    assert_eq!(a, again);
    let b = optimize(&small(2, 8)).unwrap();
    assert!(b.fidelity >= a.fidelity);
    assert_eq!(&b.trace[..4], &a.trace[..]);
    assert!(a.fidelity <= 1.0 && a.fidelity > 0.0);
    assert!(a.best.rings.iter().all(|r| r.beta_abs <= 20.0));
    assert!((0.0..1.0).contains(&a.best.drift));
}

#[test]
fn optimize_ignores_thread_count() {
    let serial = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(|| optimize(&small(2, 3)));
    let parallel = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap().install(|| optimize(&small(2, 3)));
    assert_eq!(serial.unwrap(), parallel.unwrap());
}

#[test]
fn invalid_problems_are_rejected() {
    let mut p = small(2, 2);
    p.restarts = 0;
    assert!(optimize(&p).is_err());
    let mut p = small(2, 2);
    p.s_range = Some((2, 1));
    assert!(optimize(&p).is_err());
    let mut p = small(0, 2);
    p.rings = 0;
    assert!(optimize(&p).is_err());
}

#[test]
fn problem_json_uses_defaults() {
    let p: SynthesisProblem = serde_json::from_str(
        r#"{"target": {"kind": "squeezed_vacuum", "r": 0.5}, "beta0": 1.0, "rings": 6, "harmonic": 2}"#,
    )
    .unwrap();
    assert_eq!(p.n_max_coeff, 10);
    assert_eq!(p.restarts, 64);
    assert_eq!(p.max_iters, 500);
    assert_eq!(p.sidebands(), (-15, 5));
    let full = p.with_full_budget();
    assert_eq!((full.restarts, full.max_iters), (3000, 2000));
    assert!(serde_json::from_str::<SynthesisProblem>(r#"{"target": {"kind": "cat", "alpha": [1, 0], "theta": 0}, "beta0": 1, "rings": 1, "typo": 3}"#).is_err());
}
