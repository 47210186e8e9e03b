//! Brute-force references: the photonic state as a quadrature over electron
//! positions of coherent-state projectors, and coherence factors from the
//! real-space density.
//!
//! Nothing here is fast. Grids use a whole number of points per optical cycle
//! so every node maps to one of `points_per_cycle` optical phases, and the
//! coherent states are built once per phase.

use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::electron::{ElectronPulse, ModulationSpectrum};
use crate::emission::{FilterOutcome, PostFilter};
use crate::error::{Error, Result};
use crate::fock::{coherent_state, PhotonicState};

/// Half-range `[-z_extent, z_extent]` and sampling density of the trapezoid rule.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureSpec {
    pub z_extent: f64,
    pub points_per_cycle: usize,
}

pub const RICHARDSON_TOL: f64 = 1e-5;

impl QuadratureSpec {
    /// Eight effective widths and 64 points per cycle.
    pub fn for_pulses(pulses: &[ElectronPulse]) -> Self {
        let width = pulses.iter().map(|p| p.total_width_sqr().sqrt()).fold(0.0, f64::max);
        Self { z_extent: 8.0 * width, points_per_cycle: 64 }
    }

    /// Same range, half the step.
    pub fn refined(&self) -> Self {
        Self { z_extent: self.z_extent, points_per_cycle: 2 * self.points_per_cycle }
    }

    fn step(&self) -> f64 {
        TAU / self.points_per_cycle as f64
    }

    fn nodes(&self) -> i64 {
        (self.z_extent / self.step()).ceil() as i64
    }

    fn check(&self, pulses: &[ElectronPulse]) -> Result<()> {
        if self.points_per_cycle < 16 {
            return Err(Error::InvalidParameter("at least 16 points per cycle are required".into()));
        }
        for p in pulses {
            if !p.total_width_sqr().is_finite() {
                return Err(Error::Unsupported("quadrature needs a finite coherence time and jitter".into()));
            }
            if self.z_extent < 6.0 * p.total_width_sqr().sqrt() {
                return Err(Error::InvalidParameter(format!(
                    "extent {} does not cover six effective widths",
                    self.z_extent
                )));
            }
        }
        Ok(())
    }
}

/// `A(z) = Σ c_ℓ e^{iℓz}`
fn wave(spectrum: &ModulationSpectrum, z: f64) -> C64 {
    spectrum.iter().map(|(l, c)| c * C64::from_polar(1.0, l as f64 * z)).sum()
}

/// Real-space electron density matrix with envelope and jitter integrated out.
struct Density<'a> {
    pulse: &'a ElectronPulse,
}

impl Density<'_> {
    fn envelope(&self, z: f64, zp: f64) -> f64 {
        let s2 = self.pulse.sigma_t() * self.pulse.sigma_t();
        let w = self.pulse.total_width_sqr();
        let mid = 0.5 * (z + zp);
        let gap = z - zp;
        (-gap * gap / (8.0 * s2)).exp() * (-mid * mid / (2.0 * w)).exp() / (TAU * w).sqrt()
    }
}

/// Per-phase weights `Σ_j h ρ(z_j, z_j)` of the electron density on the grid.
fn diagonal_bins(pulse: &ElectronPulse, spec: &QuadratureSpec) -> Vec<f64> {
    let dens = Density { pulse };
    let h = spec.step();
    let ppc = spec.points_per_cycle as i64;
    let mut bins = vec![0.0; spec.points_per_cycle];
    let n = spec.nodes();
    for j in -n..=n {
        let z = j as f64 * h;
        let a = wave(pulse.spectrum(), z);
        bins[j.rem_euclid(ppc) as usize] += h * dens.envelope(z, z) * a.norm_sqr();
    }
    bins
}

/// Coherence factor `∫ ρ(z,z) e^{imz} dz / ∫ ρ(z,z) dz` by the trapezoid rule.
pub fn cf_quadrature(pulse: &ElectronPulse, m: i64, spec: &QuadratureSpec) -> Result<C64> {
    spec.check(std::slice::from_ref(pulse))?;
    let eval = |sp: &QuadratureSpec| {
        let bins = diagonal_bins(pulse, sp);
        let h = sp.step();
        let total: f64 = bins.iter().sum();
        bins.iter()
            .enumerate()
            .map(|(b, w)| C64::from_polar(*w, m as f64 * b as f64 * h))
            .sum::<C64>()
            / total
    };
    let coarse = eval(spec);
    let fine = eval(&spec.refined());
    let drift = (coarse - fine).norm();
    if drift > RICHARDSON_TOL {
        return Err(Error::InsufficientResolution { drift });
    }
    Ok(fine)
}

fn phase_states(alpha0: C64, beta0: f64, ppc: usize, n_max: usize) -> Vec<DVector<C64>> {
    (0..ppc)
        .map(|b| {
            let phi = TAU * b as f64 / ppc as f64;
            coherent_state(alpha0 + C64::from_polar(beta0, -phi), n_max)
        })
        .collect()
}

/// `ℱ(w) = e^{-isw} sin(δw)/(πw)`, the momentum window seen in real space.
fn window_kernel(s: i64, delta_d: f64, w: f64) -> C64 {
    let sinc = if w == 0.0 { delta_d / PI } else { (delta_d * w).sin() / (PI * w) };
    C64::from_polar(sinc, -(s as f64) * w)
}

fn rho_once(
    pulses: &[ElectronPulse],
    beta0: f64,
    alpha0: C64,
    filters: &[PostFilter],
    spec: &QuadratureSpec,
    n_max: usize,
) -> Result<(DMatrix<C64>, f64)> {
    let d = n_max + 1;
    let ppc = spec.points_per_cycle;
    match (pulses, filters) {
        ([p], [PostFilter::None]) => {
            let bins = diagonal_bins(p, spec);
            let total: f64 = bins.iter().sum();
            let states = phase_states(alpha0, beta0, ppc, n_max);
            let mut rho = DMatrix::zeros(d, d);
            for (w, v) in bins.iter().zip(&states) {
                rho += v * v.adjoint() * C64::new(w / total, 0.0);
            }
            Ok((rho, 1.0))
        }
        ([p1, p2], [PostFilter::None, PostFilter::None]) => {
            let b1 = diagonal_bins(p1, spec);
            let b2 = diagonal_bins(p2, spec);
            let (t1, t2): (f64, f64) = (b1.iter().sum(), b2.iter().sum());
            let mut rho = DMatrix::zeros(d, d);
            for (i, w1) in b1.iter().enumerate() {
                for (j, w2) in b2.iter().enumerate() {
                    let phase = C64::from_polar(1.0, -TAU * i as f64 / ppc as f64)
                        + C64::from_polar(1.0, -TAU * j as f64 / ppc as f64);
                    let v = coherent_state(alpha0 + phase * beta0, n_max);
                    rho += &v * v.adjoint() * C64::new(w1 * w2 / (t1 * t2), 0.0);
                }
            }
            Ok((rho, 1.0))
        }
        ([p], [PostFilter::Window { s, delta_d }]) => {
            let dens = Density { pulse: p };
            let h = spec.step();
            let n = spec.nodes();
            let ppc_i = ppc as i64;
            let zs: Vec<f64> = (-n..=n).map(|j| j as f64 * h).collect();
            let amps: Vec<C64> = zs.iter().map(|&z| wave(p.spectrum(), z)).collect();
            let mut weights = DMatrix::<C64>::zeros(ppc, ppc);
            let mut total = 0.0;
            for (j, (&z, a)) in zs.iter().zip(&amps).enumerate() {
                let bj = (j as i64 - n).rem_euclid(ppc_i) as usize;
                total += h * dens.envelope(z, z) * a.norm_sqr();
                for (jp, (&zp, ap)) in zs.iter().zip(&amps).enumerate() {
                    let bjp = (jp as i64 - n).rem_euclid(ppc_i) as usize;
                    let k = window_kernel(*s, *delta_d, z - zp);
                    weights[(bj, bjp)] += a * ap.conj() * k * (h * h * dens.envelope(z, zp));
                }
            }
            let states = phase_states(alpha0, beta0, ppc, n_max);
            let basis = DMatrix::from_fn(d, ppc, |row, b| states[b][row]);
            let rho = &basis * weights * basis.adjoint() / C64::new(total, 0.0);
            let p_success = rho.trace().re;
            Ok((rho, p_success))
        }
        _ => Err(Error::Unsupported(
            "quadrature covers one electron with no filter or a window, or two unfiltered electrons".into(),
        )),
    }
}

/// Photonic state by direct quadrature, with a step-halving consistency check.
pub fn rho_direct(
    pulses: &[ElectronPulse],
    beta0: f64,
    alpha0: C64,
    filters: &[PostFilter],
    spec: &QuadratureSpec,
    n_max: usize,
) -> Result<FilterOutcome> {
    if pulses.len() != filters.len() {
        return Err(Error::InvalidParameter("one filter per electron is required".into()));
    }
    spec.check(pulses)?;
    let (coarse, _) = rho_once(pulses, beta0, alpha0, filters, spec, n_max)?;
    let (mut fine, p_success) = rho_once(pulses, beta0, alpha0, filters, &spec.refined(), n_max)?;
    let drift = (&coarse - &fine).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if drift > RICHARDSON_TOL {
        return Err(Error::InsufficientResolution { drift });
    }
    let d = fine.nrows();
    for i in 0..d {
        fine[(i, i)].im = 0.0;
        for j in i + 1..d {
            fine[(j, i)] = fine[(i, j)].conj();
        }
    }
    Ok(FilterOutcome { state: PhotonicState::mixed_normalized(fine)?, p_success })
}

/// Unnormalized exact post-selection amplitudes `α_n` for lattice electrons by
/// quadrature over each electron's optical phase.
pub fn exact_amplitudes_quadrature(
    spectra: &[ModulationSpectrum],
    beta0: f64,
    s: &[i64],
    points_per_cycle: usize,
    n_max: usize,
) -> Result<DVector<C64>> {
    if spectra.is_empty() || spectra.len() != s.len() || spectra.len() > 3 {
        return Err(Error::Unsupported("phase quadrature covers one to three electrons".into()));
    }
    let ppc = points_per_cycle;
    let h = TAU / ppc as f64;
    // per electron and phase: A_i(φ) e^{-i s_i φ} / ‖c‖, already weighted by h/2π
    let factors: Vec<Vec<C64>> = spectra
        .iter()
        .zip(s)
        .map(|(spec, &si)| {
            let scale = 1.0 / spec.norm_sqr().sqrt();
            (0..ppc)
                .map(|b| {
                    let phi = b as f64 * h;
                    wave(spec, phi) * C64::from_polar(scale / ppc as f64, -(si as f64) * phi)
                })
                .collect()
        })
        .collect();
    let count = spectra.len();
    let mut out = DVector::zeros(n_max + 1);
    let total = ppc.pow(count as u32);
    for flat in 0..total {
        let mut rest = flat;
        let mut weight = C64::new(1.0, 0.0);
        let mut gamma = C64::new(0.0, 0.0);
        for f in &factors {
            let b = rest % ppc;
            rest /= ppc;
            weight *= f[b];
            gamma += C64::from_polar(beta0, -(b as f64) * h);
        }
        out += coherent_state(gamma, n_max) * weight;
    }
    Ok(out)
}
