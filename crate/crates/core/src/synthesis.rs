//! Ring-segmented modulation profiles and their optimization toward a target
//! photonic state.

use std::f64::consts::{PI, TAU};

use nalgebra::DVector;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::electron::{drift_phase, iels_cutoff, ModulationSpectrum};
use crate::emission::emit_exact;
use crate::error::{Error, Result};
use crate::fock::{default_n_max, fidelity, PhotonicState, TargetState};
use crate::special::{bessel_j_array, coherent_amplitudes, signed_order};

/// Default finite-difference step for gradients.
pub const FD_STEP: f64 = 1e-3;
const ARMIJO_C: f64 = 1e-4;
const MIN_STEP: f64 = 1e-8;
const TIE_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ring {
    pub beta_abs: f64,
    /// `arg(-β)` in radians.
    pub beta_phase: f64,
}

/// Coupling of each of the `M` equal-area rings, a common drift and the laser harmonic.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RingProfile {
    pub rings: Vec<Ring>,
    pub drift: f64,
    pub harmonic: u32,
}

impl RingProfile {
    pub fn beta_sq_sum(&self) -> f64 {
        self.rings.iter().map(|r| r.beta_abs * r.beta_abs).sum()
    }

    fn check(&self) -> Result<()> {
        if self.rings.is_empty() {
            return Err(Error::InvalidParameter("a profile needs at least one ring".into()));
        }
        if self.harmonic == 0 {
            return Err(Error::InvalidParameter("harmonic must be at least 1".into()));
        }
        if self.rings.iter().any(|r| !(r.beta_abs >= 0.0) || !r.beta_abs.is_finite() || !r.beta_phase.is_finite())
            || !self.drift.is_finite()
        {
            return Err(Error::InvalidParameter("ring couplings must be finite with beta_abs >= 0".into()));
        }
        Ok(())
    }
}

/// Coefficient of stage index `l` before drift: `Σ_i J_l(2|β_i|) e^{i l φ_i}`.
fn ring_sum(tables: &[Vec<f64>], rings: &[Ring], l: i64) -> C64 {
    tables
        .iter()
        .zip(rings)
        .map(|(t, r)| C64::from_polar(signed_order(t, l), l as f64 * r.beta_phase))
        .sum()
}

/// Normalized electron spectrum produced by a ring profile.
pub fn ring_coefficients(profile: &RingProfile) -> Result<ModulationSpectrum> {
    profile.check()?;
    let beta_max = profile.rings.iter().map(|r| r.beta_abs).fold(0.0, f64::max);
    let cut = iels_cutoff(beta_max);
    let tables: Vec<Vec<f64>> =
        profile.rings.iter().map(|r| bessel_j_array(cut as usize, 2.0 * r.beta_abs)).collect();
    let h = profile.harmonic as i64;
    let mut amps = vec![C64::new(0.0, 0.0); (2 * cut * h + 1) as usize];
    for l in -cut..=cut {
        amps[((l + cut) * h) as usize] = ring_sum(&tables, &profile.rings, l) * drift_phase(l, profile.drift);
    }
    let spec = ModulationSpectrum::new(-cut * h, amps, profile.harmonic)?;
    if spec.norm_sqr() == 0.0 {
        return ModulationSpectrum::new(0, vec![C64::new(1.0, 0.0)], profile.harmonic);
    }
    spec.normalize()
}

fn default_coeff() -> usize {
    10
}
fn default_harmonic() -> u32 {
    1
}
fn default_cap() -> f64 {
    14.0
}
fn default_restarts() -> usize {
    64
}
fn default_iters() -> usize {
    500
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthesisProblem {
    pub target: TargetState,
    /// Number of target amplitudes matched beyond the vacuum one.
    #[serde(default = "default_coeff")]
    pub n_max_coeff: usize,
    pub beta0: f64,
    /// Number of rings `M`.
    pub rings: usize,
    #[serde(default = "default_harmonic")]
    pub harmonic: u32,
    /// Inclusive sideband range; defaults to `[-n_max_coeff - 5, 5]`.
    #[serde(default)]
    pub s_range: Option<(i64, i64)>,
    #[serde(default = "default_cap")]
    pub beta_cap: f64,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default = "default_iters")]
    pub max_iters: usize,
    #[serde(default)]
    pub seed: u64,
}

impl SynthesisProblem {
    pub fn new(target: TargetState, beta0: f64, rings: usize) -> Self {
        Self {
            target,
            n_max_coeff: default_coeff(),
            beta0,
            rings,
            harmonic: default_harmonic(),
            s_range: None,
            beta_cap: default_cap(),
            restarts: default_restarts(),
            max_iters: default_iters(),
            seed: 0,
        }
    }

    /// Restart and iteration budget of the original study.
    pub fn with_full_budget(mut self) -> Self {
        self.restarts = 3000;
        self.max_iters = 2000;
        self
    }

    pub fn sidebands(&self) -> (i64, i64) {
        self.s_range.unwrap_or((-(self.n_max_coeff as i64) - 5, 5))
    }

    /// Photon-number truncation used to represent the generated state.
    pub fn working_n_max(&self) -> usize {
        self.n_max_coeff.max(default_n_max(self.beta0))
    }

    fn check(&self) -> Result<()> {
        let (lo, hi) = self.sidebands();
        if self.rings == 0 || self.restarts == 0 || self.max_iters == 0 {
            return Err(Error::InvalidParameter("rings, restarts and max_iters must be positive".into()));
        }
        if !(self.beta_cap > 0.0) || !(self.beta0 >= 0.0) || self.harmonic == 0 || lo > hi {
            return Err(Error::InvalidParameter("invalid bounds, coupling, harmonic or sideband range".into()));
        }
        Ok(())
    }
}

/// Fidelity and success probability of one candidate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub fidelity: f64,
    pub p_success: f64,
}

/// Full pipeline: ring coefficients, exact post-selection on `s`, overlap with
/// the target truncated to its first `n_max_coeff + 1` amplitudes.
pub fn objective(profile: &RingProfile, s: i64, problem: &SynthesisProblem) -> Result<Evaluation> {
    let spec = ring_coefficients(profile)?;
    let n_work = problem.working_n_max();
    let target = problem.target.truncated(problem.n_max_coeff, n_work + 1)?;
    let out = emit_exact(&[spec], problem.beta0, &[s], Some(n_work))?;
    Ok(Evaluation { fidelity: fidelity(&target, &out.state)?, p_success: out.p_success })
}

/// Fast fidelity evaluation for a fixed problem and sideband.
struct Evaluator {
    target: DVector<C64>,
    coherent: Vec<f64>,
    s: i64,
    harmonic: i64,
    rings: usize,
    beta_cap: f64,
    order_max: usize,
}

impl Evaluator {
    fn new(problem: &SynthesisProblem, s: i64) -> Result<Self> {
        let n_work = problem.working_n_max();
        let target = match problem.target.truncated(problem.n_max_coeff, n_work + 1)? {
            PhotonicState::Pure(v) => v,
            PhotonicState::Mixed(_) => unreachable!("target factories return pure states"),
        };
        let h = problem.harmonic as i64;
        let order_max = (s.abs().max((n_work as i64 + s).abs()) / h) as usize;
        Ok(Self {
            target,
            coherent: coherent_amplitudes(n_work, problem.beta0),
            s,
            harmonic: h,
            rings: problem.rings,
            beta_cap: problem.beta_cap,
            order_max,
        })
    }

    fn decode(&self, x: &[f64]) -> RingProfile {
        let m = self.rings;
        let rings = (0..m)
            .map(|i| Ring { beta_abs: self.beta_cap * logistic(x[i]), beta_phase: x[m + i].rem_euclid(TAU) })
            .collect();
        RingProfile { rings, drift: x[2 * m].rem_euclid(1.0), harmonic: self.harmonic as u32 }
    }

    fn fidelity(&self, x: &[f64]) -> f64 {
        let m = self.rings;
        let drift = x[2 * m];
        let tables: Vec<(Vec<f64>, f64)> = (0..m)
            .map(|i| (bessel_j_array(self.order_max, 2.0 * self.beta_cap * logistic(x[i])), x[m + i]))
            .collect();
        let mut overlap = C64::new(0.0, 0.0);
        let mut norm = 0.0;
        for (n, (&a, t)) in self.coherent.iter().zip(self.target.iter()).enumerate() {
            let site = n as i64 + self.s;
            if site % self.harmonic != 0 {
                continue;
            }
            let l = site / self.harmonic;
            let c: C64 = tables
                .iter()
                .map(|(tab, phase)| C64::from_polar(signed_order(tab, l), l as f64 * phase))
                .sum::<C64>()
                * drift_phase(l, drift);
            let amp = c * a;
            overlap += t.conj() * amp;
            norm += amp.norm_sqr();
        }
        if norm > 0.0 {
            overlap.norm_sqr() / norm
        } else {
            0.0
        }
    }
}

fn logistic(u: f64) -> f64 {
    1.0 / (1.0 + (-u).exp())
}

fn logit(p: f64) -> f64 {
    let p = p.clamp(1e-9, 1.0 - 1e-9);
    (p / (1.0 - p)).ln()
}

/// Central finite-difference gradient.
pub fn fd_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], step: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + step;
            let up = f(&probe);
            probe[i] = x[i] - step;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * step)
        })
        .collect()
}

/// Steepest ascent with backtracking line search; returns the final point and value.
pub fn steepest_ascent(f: impl Fn(&[f64]) -> f64, start: Vec<f64>, max_iters: usize) -> (Vec<f64>, f64) {
    let mut x = start;
    let mut fx = f(&x);
    let mut step = 1.0;
    for _ in 0..max_iters {
        let g = fd_gradient(&f, &x, FD_STEP);
        let gnorm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(gnorm > 0.0) {
            break;
        }
        let dir: Vec<f64> = g.iter().map(|v| v / gnorm).collect();
        let mut accepted = None;
        while step >= MIN_STEP {
            let trial: Vec<f64> = x.iter().zip(&dir).map(|(xi, di)| xi + step * di).collect();
            let ft = f(&trial);
            if ft >= fx + ARMIJO_C * step * gnorm {
                accepted = Some((trial, ft));
                break;
            }
            step *= 0.5;
        }
        match accepted {
            Some((trial, ft)) => {
                x = trial;
                fx = ft;
                step = (2.0 * step).min(PI);
            }
            None => break,
        }
    }
    (x, fx)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthesisResult {
    pub best: RingProfile,
    pub s: i64,
    pub fidelity: f64,
    pub p_success: f64,
    /// Best fidelity of each restart over all sidebands.
    pub trace: Vec<f64>,
    pub seed: u64,
    pub restarts: usize,
    pub max_iters: usize,
}

/// Random generator for one restart at one sideband; independent of how many
/// restarts run in total and of execution order.
pub fn restart_rng(seed: u64, s_index: u64, restart: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream((s_index << 32) | restart);
    rng
}

struct Candidate {
    restart: usize,
    s: i64,
    profile: RingProfile,
    fidelity: f64,
}

fn better(a: &Candidate, b: &Candidate) -> bool {
    if a.fidelity > b.fidelity + TIE_TOL {
        return true;
    }
    if a.fidelity < b.fidelity - TIE_TOL {
        return false;
    }
    let (sa, sb) = (a.profile.beta_sq_sum(), b.profile.beta_sq_sum());
    if sa < sb - TIE_TOL {
        return true;
    }
    if sa > sb + TIE_TOL {
        return false;
    }
    a.s.abs() < b.s.abs()
}

/// Random-restart steepest ascent of the fidelity over couplings, phases and
/// drift, for every sideband in the problem's range.
pub fn optimize(problem: &SynthesisProblem) -> Result<SynthesisResult> {
    problem.check()?;
    let (lo, hi) = problem.sidebands();
    let m = problem.rings;
    let jobs: Vec<(i64, usize)> = (lo..=hi).flat_map(|s| (0..problem.restarts).map(move |r| (s, r))).collect();
    let evaluators: Vec<Evaluator> = (lo..=hi).map(|s| Evaluator::new(problem, s)).collect::<Result<_>>()?;

    let candidates: Vec<Candidate> = jobs
        .par_iter()
        .map(|&(s, r)| {
            let ev = &evaluators[(s - lo) as usize];
            let mut rng = restart_rng(problem.seed, (s - lo) as u64, r as u64);
            let mut x = Vec::with_capacity(2 * m + 1);
            for _ in 0..m {
                x.push(logit(rng.gen::<f64>()));
            }
            for _ in 0..m {
                x.push(rng.gen::<f64>() * TAU);
            }
            x.push(rng.gen::<f64>());
            let (x, f) = steepest_ascent(|p| ev.fidelity(p), x, problem.max_iters);
            Candidate { restart: r, s, profile: ev.decode(&x), fidelity: f }
        })
        .collect();

    let mut trace = vec![0.0_f64; problem.restarts];
    let mut best: Option<&Candidate> = None;
    for c in &candidates {
        trace[c.restart] = trace[c.restart].max(c.fidelity);
        if best.map_or(true, |b| better(c, b)) {
            best = Some(c);
        }
    }
    let best = best.expect("at least one restart runs");
    let eval = objective(&best.profile, best.s, problem)?;
    Ok(SynthesisResult {
        best: best.profile.clone(),
        s: best.s,
        fidelity: eval.fidelity,
        p_success: eval.p_success,
        trace,
        seed: problem.seed,
        restarts: problem.restarts,
        max_iters: problem.max_iters,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn problem() -> SynthesisProblem {
        SynthesisProblem::new(TargetState::Cat { alpha: C64::new(1.0, 0.0), theta: PI / 2.0 }, 1.5, 2)
    }

    #[test]
    fn fast_path_matches_pipeline() {
        let p = problem();
        let ev = Evaluator::new(&p, -3).unwrap();
        let x = [0.3, -1.1, 0.7, 2.9, 0.37];
        let fast = ev.fidelity(&x);
        let slow = objective(&ev.decode(&x), -3, &p).unwrap().fidelity;
        assert!((fast - slow).abs() < 1e-12, "{fast} vs {slow}");
    }

    #[test]
    fn restart_streams_are_distinct() {
        let a: f64 = restart_rng(7, 0, 0).gen();
        let b: f64 = restart_rng(7, 0, 1).gen();
        let c: f64 = restart_rng(7, 1, 0).gen();
        assert!(a != b && a != c && b != c);
        let again: f64 = restart_rng(7, 0, 1).gen();
        assert_eq!(b, again);
    }

    #[test]
    fn ascent_finds_quadratic_peak() {
        let f = |x: &[f64]| 1.0 - (x[0] - 0.3).powi(2) - 2.0 * (x[1] + 0.1).powi(2);
        let (x, fx) = steepest_ascent(f, vec![1.0, 1.0], 500);
        assert!((fx - 1.0).abs() < 1e-8);
        assert!((x[0] - 0.3).abs() < 1e-3 && (x[1] + 0.1).abs() < 1e-3);
    }
}
