use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use freelight::{
    coherence_factor, coherence_factor_closed_drift, emit_exact, emit_no_filter, emit_single_window, objective,
    prefilter_cf, PreFilter, PrefilterForm, Ring, RingProfile, SynthesisProblem, TargetState,
};
use freelight_bench::{gaussian_pulse, iels_spectrum};
use num_complex::Complex64;

fn coherence(c: &mut Criterion) {
    let mut g = c.benchmark_group("coherence_factor");
    g.bench_function("closed_form", |b| b.iter(|| coherence_factor_closed_drift(black_box(3.2), black_box(0.17), 1)));
    for sigma in [3.0, 50.0] {
        let pulse = gaussian_pulse(3.2, sigma, 0.0);
        g.bench_with_input(BenchmarkId::new("pulse", sigma), &pulse, |b, p| b.iter(|| coherence_factor(p, 1)));
    }
    let spec = iels_spectrum(20.0, 0.0);
    let filter = PreFilter::new(50.0, 16.5).unwrap();
    g.bench_function("prefilter_lattice", |b| b.iter(|| prefilter_cf(&spec, &filter, 1, PrefilterForm::Lattice)));
    let finite = PrefilterForm::Finite { sigma_t: 3.0, delta_t: 0.0 };
    g.bench_function("prefilter_finite", |b| b.iter(|| prefilter_cf(&spec, &filter, 1, finite)));
    g.finish();
}

fn emission(c: &mut Criterion) {
    let mut g = c.benchmark_group("emission");
    let pulse = gaussian_pulse(1.5, 3.0, 0.0);
    for n in 1..=3 {
        let pulses = vec![pulse.clone(); n];
        g.bench_with_input(BenchmarkId::new("no_filter", n), &pulses, |b, p| b.iter(|| emit_no_filter(p, 0.8, None)));
    }
    g.bench_function("single_window", |b| b.iter(|| emit_single_window(&pulse, 1.0, 0, black_box(0.5), None)));
    let cat = iels_spectrum(20.0, 0.0);
    g.bench_function("exact_cat", |b| b.iter(|| emit_exact(std::slice::from_ref(&cat), 2.0, &[-5], Some(60))));
    g.finish();
}

fn synthesis(c: &mut Criterion) {
    let problem = SynthesisProblem::new(TargetState::Cat { alpha: Complex64::new(1.0, 0.0), theta: std::f64::consts::FRAC_PI_2 }, 1.5, 6);
    let profile = RingProfile {
        rings: (0..6).map(|i| Ring { beta_abs: 1.0 + i as f64, beta_phase: 0.3 * i as f64 }).collect(),
        drift: 0.21,
        harmonic: 1,
    };
    c.bench_function("synthesis/objective_m6", |b| b.iter(|| objective(&profile, -3, &problem)));
}

criterion_group!(benches, coherence, emission, synthesis);
criterion_main!(benches);
