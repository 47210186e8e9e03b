//! Photonic states produced by uncorrelated electrons, with and without
//! energy post-selection, plus intensity statistics.

use std::f64::consts::{PI, SQRT_2};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::electron::{coherence_factor, lattice_weight, ElectronPulse, ModulationSpectrum};
use crate::error::{Error, Result};
use crate::fock::{default_n_max, displacement_matrix, Observable, PhotonicState, TAIL_TOL};
use crate::special::{coherent_amplitudes, erf, ln_fact, upper_gamma_ratio};

const EMPTY_EVENT: f64 = 1e-30;
const SERIES_TOL: f64 = 1e-10;
const SERIES_CAP: usize = 40;

/// Energy post-selection applied to one electron.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PostFilter {
    None,
    /// Keeps final momenta within `delta_d` of sideband `s`.
    Window { s: i64, delta_d: f64 },
    Exact { s: i64 },
}

/// A conditioned photonic state and the probability of the conditioning event.
#[derive(Clone, Debug, PartialEq)]
pub struct FilterOutcome {
    pub state: PhotonicState,
    pub p_success: f64,
}

/// Coherence factors of one electron at orders one and two.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CfOrders {
    pub m1: C64,
    pub m2: C64,
}

impl CfOrders {
    pub fn new(m1: C64, m2: C64) -> Self {
        Self { m1, m2 }
    }

    pub fn of_pulse(pulse: &ElectronPulse) -> Self {
        Self { m1: coherence_factor(pulse, 1), m2: coherence_factor(pulse, 2) }
    }

    /// `M_k` for `|k| ≤ 2`, using `M_0 = 1` and `M_{-k} = M_k*`.
    pub fn at(&self, k: i64) -> C64 {
        match k {
            0 => C64::new(1.0, 0.0),
            1 => self.m1,
            -1 => self.m1.conj(),
            2 => self.m2,
            -2 => self.m2.conj(),
            _ => C64::new(0.0, 0.0),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmissionStats {
    /// Mean photon number `I_N`.
    pub intensity: f64,
    /// `⟨a†² a²⟩`
    pub g_factor: f64,
    /// Photon-number variance.
    pub fluct: f64,
}

impl EmissionStats {
    pub fn g_ratio(&self) -> f64 {
        self.g_factor / (self.intensity * self.intensity)
    }

    pub fn fano(&self) -> f64 {
        self.fluct / self.intensity
    }
}

fn check_beta0(beta0: f64) -> Result<()> {
    if beta0 >= 0.0 && beta0.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("beta0 = {beta0} must be finite and non-negative")))
    }
}

fn check_tail(pops: &[f64], total: f64) -> Result<()> {
    let n = pops.len();
    let tail: f64 = pops[n.saturating_sub(2)..].iter().sum::<f64>() / total;
    if tail > TAIL_TOL {
        return Err(Error::TruncationTooSmall { n_max: n - 1, tail });
    }
    Ok(())
}

/// Copy the upper triangle onto the lower one so the result is exactly hermitian.
fn mirror_upper(rho: &mut DMatrix<C64>) {
    let d = rho.nrows();
    for i in 0..d {
        rho[(i, i)].im = 0.0;
        for j in i + 1..d {
            rho[(j, i)] = rho[(i, j)].conj();
        }
    }
}

/// Single-electron state `ρ_nn' = ⟨n|β₀⟩⟨β₀|n'⟩ M_{n'-n}` from any coherence factor.
pub fn emit_from_cf(beta0: f64, n_max: usize, cf: impl Fn(i64) -> C64) -> Result<PhotonicState> {
    check_beta0(beta0)?;
    let a = coherent_amplitudes(n_max, beta0);
    let d = n_max + 1;
    let mut rho = DMatrix::zeros(d, d);
    for n in 0..d {
        for np in n..d {
            rho[(n, np)] = cf(np as i64 - n as i64) * (a[n] * a[np]);
        }
    }
    mirror_upper(&mut rho);
    let pops: Vec<f64> = (0..d).map(|i| rho[(i, i)].re).collect();
    check_tail(&pops, rho.trace().re)?;
    PhotonicState::mixed_normalized(rho)
}

/// Apply one electron as a channel: `ρ → E_z[D(β₀e^{-iz}) ρ D(β₀e^{-iz})†]`.
fn electron_channel(rho: &DMatrix<C64>, disp: &DMatrix<C64>, cf: &[C64]) -> DMatrix<C64> {
    let d = rho.nrows();
    let centre = 2 * d as i64 - 2;
    let mut out = DMatrix::zeros(d, d);
    for m in 0..d {
        for mp in m..d {
            let mut acc = C64::new(0.0, 0.0);
            for n in 0..d {
                let left = disp[(m, n)];
                if left == C64::new(0.0, 0.0) {
                    continue;
                }
                let mut inner = C64::new(0.0, 0.0);
                for np in 0..d {
                    let k = (mp as i64 - np as i64) - (m as i64 - n as i64);
                    inner += rho[(n, np)] * disp[(mp, np)].conj() * cf[(k + centre) as usize];
                }
                acc += left * inner;
            }
            out[(m, mp)] = acc;
        }
    }
    mirror_upper(&mut out);
    out
}

/// State left by `N ≤ 3` uncorrelated electrons without energy filtering.
///
/// The default truncation uses `N·β₀` as the effective amplitude.
pub fn emit_no_filter(pulses: &[ElectronPulse], beta0: f64, n_max: Option<usize>) -> Result<PhotonicState> {
    check_beta0(beta0)?;
    let count = pulses.len();
    if count == 0 {
        return Err(Error::InvalidParameter("at least one electron is required".into()));
    }
    if count > 3 {
        return Err(Error::Unsupported(format!(
            "{count} electrons: the full state is limited to three, use emission_stats for larger N"
        )));
    }
    let n_max = n_max.unwrap_or_else(|| default_n_max(count as f64 * beta0));
    if count == 1 {
        return emit_from_cf(beta0, n_max, |k| coherence_factor(&pulses[0], k));
    }
    let d = n_max + 1;
    let disp = displacement_matrix(C64::new(beta0, 0.0), d);
    let mut rho = DMatrix::zeros(d, d);
    rho[(0, 0)] = C64::new(1.0, 0.0);
    for pulse in pulses {
        let span = 2 * d as i64 - 2;
        let cf: Vec<C64> = (-span..=span).map(|k| coherence_factor(pulse, k)).collect();
        rho = electron_channel(&rho, &disp, &cf);
    }
    let pops: Vec<f64> = (0..d).map(|i| rho[(i, i)].re).collect();
    check_tail(&pops, rho.trace().re)?;
    PhotonicState::mixed_normalized(rho)
}

/// Truncated 2D convolution `(x ⋆ y)[a][b] = Σ x[a₁][b₁] y[a-a₁][b-b₁]`.
pub(crate) fn convolve2(x: &DMatrix<C64>, y: &DMatrix<C64>) -> DMatrix<C64> {
    let (ra, rb) = (x.nrows(), x.ncols());
    let mut out = DMatrix::zeros(ra, rb);
    for a1 in 0..ra {
        for b1 in 0..rb {
            let v = x[(a1, b1)];
            if v == C64::new(0.0, 0.0) {
                continue;
            }
            for a2 in 0..ra - a1 {
                for b2 in 0..rb - b1 {
                    out[(a1 + a2, b1 + b2)] += v * y[(a2, b2)];
                }
            }
        }
    }
    out
}

/// Photon statistics of `N` uncorrelated electrons from their order-1 and
/// order-2 coherence factors; no limit on `N`.
pub fn emission_stats(cfs: &[CfOrders], beta0: f64) -> Result<EmissionStats> {
    check_beta0(beta0)?;
    if cfs.is_empty() {
        return Err(Error::InvalidParameter("at least one electron is required".into()));
    }
    for c in cfs {
        if c.m1.norm() > 1.0 + 1e-12 || c.m2.norm() > 1.0 + 1e-12 {
            return Err(Error::InvalidParameter(format!("coherence factor above one: {c:?}")));
        }
    }
    // moments E[A^a A*^b]/(a! b!) for a, b ≤ 2, built one electron at a time
    let fact = [1.0, 1.0, 2.0];
    let mut acc = DMatrix::from_fn(3, 3, |a, b| C64::new(if a == 0 && b == 0 { 1.0 } else { 0.0 }, 0.0));
    for c in cfs {
        let table = DMatrix::from_fn(3, 3, |a, b| c.at(b as i64 - a as i64) / (fact[a] * fact[b]));
        acc = convolve2(&acc, &table);
    }
    let b2 = beta0 * beta0;
    let intensity = b2 * acc[(1, 1)].re;
    let g_factor = b2 * b2 * 4.0 * acc[(2, 2)].re;
    let fluct = g_factor + intensity - intensity * intensity;
    let stats = EmissionStats { intensity, g_factor, fluct };
    if intensity > 0.0 && (stats.g_ratio() < 1.0 - 1e-9 || fluct < -1e-9) {
        return Err(Error::UnphysicalCf { g_ratio: stats.g_ratio(), fluct });
    }
    Ok(stats)
}

/// Mean photon number from the pairwise formula `β₀²[N + Σ_{i≠j} M¹_j M¹_i*]`.
pub fn intensity_pairwise(cfs: &[CfOrders], beta0: f64) -> f64 {
    let mut cross = C64::new(0.0, 0.0);
    for (i, a) in cfs.iter().enumerate() {
        for (j, b) in cfs.iter().enumerate() {
            if i != j {
                cross += b.m1 * a.m1.conj();
            }
        }
    }
    beta0 * beta0 * (cfs.len() as f64 + cross.re)
}

/// Single electron post-selected in a momentum window of half-width `delta_d`
/// around sideband `s`, with Gaussian envelope and jitter.
pub fn emit_single_window(
    pulse: &ElectronPulse,
    beta0: f64,
    s: i64,
    delta_d: f64,
    n_max: Option<usize>,
) -> Result<FilterOutcome> {
    check_beta0(beta0)?;
    if !(delta_d > 0.0) {
        return Err(Error::InvalidParameter(format!("window half-width {delta_d} must be positive")));
    }
    let n_max = n_max.unwrap_or_else(|| default_n_max(beta0));
    let d = n_max + 1;
    let spec = pulse.spectrum();
    let len = spec.amps().len() as i64;
    let off = spec.offset();

    // pair table indexed by (ℓ+ℓ' - 2·offset, ℓ-ℓ' + len-1)
    let width = (2 * len - 1) as usize;
    let mut pairs = vec![C64::new(0.0, 0.0); width * width];
    for (l, c) in spec.iter() {
        for (lp, cp) in spec.iter() {
            let sum = (l + lp - 2 * off) as usize;
            let diff = (l - lp + len - 1) as usize;
            pairs[sum * width + diff] += c * cp.conj();
        }
    }

    let sigma = pulse.sigma_t();
    let edge = |y: i64| -> f64 {
        let half = y as f64 / 2.0;
        if sigma.is_infinite() {
            let sgn = |v: f64| if v > 0.0 { 1.0 } else if v < 0.0 { -1.0 } else { 0.0 };
            sgn(delta_d + half) + sgn(delta_d - half)
        } else {
            let k = SQRT_2 * sigma;
            erf(k * (delta_d + half)) + erf(k * (delta_d - half))
        }
    };
    // y = ℓ+ℓ' - n - n' - 2s ranges over [2·off - 2·n_max - 2s, 2·max - 2s]
    let y_lo = 2 * off - 2 * n_max as i64 - 2 * s;
    let y_hi = 2 * spec.max_index() - 2 * s;
    let edges: Vec<f64> = (y_lo..=y_hi).map(edge).collect();

    let w = pulse.total_width_sqr();
    let a = coherent_amplitudes(n_max, beta0);
    let mut rho = DMatrix::zeros(d, d);
    for n in 0..d {
        for np in n..d {
            let shift = np as i64 - n as i64;
            let mut acc = C64::new(0.0, 0.0);
            for diff in 0..width {
                let g = lattice_weight(diff as i64 - (len - 1) + shift, w);
                if g == 0.0 {
                    continue;
                }
                let mut inner = C64::new(0.0, 0.0);
                for sum in 0..width {
                    let p = pairs[sum * width + diff];
                    if p == C64::new(0.0, 0.0) {
                        continue;
                    }
                    let y = sum as i64 + 2 * off - (n + np) as i64 - 2 * s;
                    inner += p * edges[(y - y_lo) as usize];
                }
                acc += inner * g;
            }
            rho[(n, np)] = acc * (0.5 * a[n] * a[np] / pulse.density_norm());
        }
    }
    mirror_upper(&mut rho);
    let trace = rho.trace().re;
    if !(trace >= EMPTY_EVENT) {
        return Err(Error::EmptyPostSelection { p_success: trace });
    }
    let pops: Vec<f64> = (0..d).map(|i| rho[(i, i)].re).collect();
    check_tail(&pops, trace)?;
    Ok(FilterOutcome { state: PhotonicState::mixed_normalized(rho)?, p_success: trace })
}

fn pure_outcome(amps: DVector<C64>) -> Result<FilterOutcome> {
    let p = amps.norm_squared();
    if !(p >= EMPTY_EVENT) {
        return Err(Error::EmptyPostSelection { p_success: p });
    }
    let pops: Vec<f64> = amps.iter().map(|a| a.norm_sqr()).collect();
    check_tail(&pops, p)?;
    Ok(FilterOutcome { state: PhotonicState::pure_normalized(amps)?, p_success: p })
}

/// Amplitudes `⟨n|β₀⟩ c_{n+s}` of one electron post-selected exactly on
/// sideband `s`, without normalization.
pub fn exact_amplitudes_single(spectrum: &ModulationSpectrum, beta0: f64, s: i64, n_max: usize) -> DVector<C64> {
    let scale = 1.0 / spectrum.norm_sqr().sqrt();
    let a = coherent_amplitudes(n_max, beta0);
    DVector::from_iterator(n_max + 1, (0..=n_max).map(|n| spectrum.amp(n as i64 + s) * (a[n] * scale)))
}

/// Pure state after exact energy post-selection of every electron
/// (infinite coherence time).
pub fn emit_exact(
    spectra: &[ModulationSpectrum],
    beta0: f64,
    s: &[i64],
    n_max: Option<usize>,
) -> Result<FilterOutcome> {
    check_beta0(beta0)?;
    let count = spectra.len();
    if count == 0 || count != s.len() {
        return Err(Error::InvalidParameter(format!(
            "{count} spectra but {} post-selected sidebands",
            s.len()
        )));
    }
    if count > 4 {
        return Err(Error::Unsupported(format!("{count} electrons: exact post-selection is limited to four")));
    }
    let n_max = n_max.unwrap_or_else(|| default_n_max(count as f64 * beta0));
    if count == 1 {
        return pure_outcome(exact_amplitudes_single(&spectra[0], beta0, s[0], n_max));
    }
    if beta0 == 0.0 {
        let amp: C64 = spectra.iter().zip(s).map(|(c, &si)| c.amp(si) / c.norm_sqr().sqrt()).product();
        let mut v = DVector::zeros(n_max + 1);
        v[0] = amp;
        return pure_outcome(v);
    }

    // T[a][b] = Σ Π_i c^i_{a_i-b_i+s_i} β₀^{a_i+b_i} / (a_i! b_i!)
    let rows = n_max + SERIES_CAP + 1;
    let cols = SERIES_CAP + 1;
    let lb = beta0.ln();
    let mut table = DMatrix::from_fn(rows, cols, |a, b| C64::new(if a == 0 && b == 0 { 1.0 } else { 0.0 }, 0.0));
    for (spec, &si) in spectra.iter().zip(s) {
        let scale = 1.0 / spec.norm_sqr().sqrt();
        let single = DMatrix::from_fn(rows, cols, |a, b| {
            let c = spec.amp(a as i64 - b as i64 + si);
            if c == C64::new(0.0, 0.0) {
                return c;
            }
            c * (scale * ((a + b) as f64 * lb - ln_fact(a) - ln_fact(b)).exp())
        });
        table = convolve2(&table, &single);
    }

    let x = (count as f64 * beta0).powi(2);
    let mut amps: DVector<C64> = DVector::zeros(n_max + 1);
    let mut converged = false;
    for k in 0..=SERIES_CAP {
        let mut term_mass = 0.0;
        for n in 0..=n_max {
            let coeff = (ln_fact(n + k) - 0.5 * ln_fact(n) - k as f64 * std::f64::consts::LN_2).exp();
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            let term = table[(n + k, k)] * (sign * coeff);
            term_mass += term.norm_sqr();
            amps[n] += term;
        }
        let mass = amps.norm_squared();
        if k as f64 > 0.5 * x && term_mass <= SERIES_TOL * SERIES_TOL * mass.max(EMPTY_EVENT) {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NotConverged(format!(
            "exact post-selection series for N = {count}, beta0 = {beta0} needs more than {SERIES_CAP} terms"
        )));
    }
    pure_outcome(amps)
}

/// Result of the asymptotic cat-state expression.
#[derive(Clone, Debug, PartialEq)]
pub struct CatClosedForm {
    pub state: PhotonicState,
    /// Incomplete-gamma expression for the unnormalized squared norm.
    pub p_formula: f64,
    /// The same quantity summed directly over the amplitudes.
    pub direct_sum: f64,
    /// Physical success probability `p_formula / (4π|β|)`; undefined at `|β| = 0`.
    pub p_success: Option<f64>,
    /// Cat phase `θ = sπ + π/2 - 4|β|`.
    pub theta: f64,
    /// Coherent amplitude `χ = -iβ₀ e^{i·beta_phase}`.
    pub chi: C64,
}

/// Cat state formed by exact post-selection of a strongly modulated electron,
/// from the large-`|β|` form of the Bessel coefficients.
pub fn cat_closed_form(beta_abs: f64, beta_phase: f64, s: i64, n_max_trunc: usize, beta0: f64) -> Result<CatClosedForm> {
    check_beta0(beta0)?;
    if !(beta_abs >= 0.0) {
        return Err(Error::InvalidParameter(format!("beta_abs = {beta_abs}")));
    }
    let theta = s as f64 * PI + PI / 2.0 - 4.0 * beta_abs;
    let chi = C64::new(0.0, -beta0) * C64::from_polar(1.0, beta_phase);
    let a = coherent_amplitudes(n_max_trunc, beta0);
    let amps = DVector::from_iterator(
        n_max_trunc + 1,
        (0..=n_max_trunc).map(|n| {
            let parity = if n % 2 == 0 { 1.0 } else { -1.0 };
            C64::from_polar(a[n], n as f64 * chi.arg()) * (C64::new(1.0, 0.0) + C64::from_polar(parity, theta))
        }),
    );
    let direct_sum = amps.norm_squared();
    let b2 = beta0 * beta0;
    let sign = if s.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    let p_formula = 2.0
        * (upper_gamma_ratio(n_max_trunc, b2)
            + sign * (-2.0 * b2).exp() * (4.0 * beta_abs).sin() * upper_gamma_ratio(n_max_trunc, -b2));
    let state = PhotonicState::pure_normalized(amps)?;
    let p_success = (beta_abs > 0.0).then(|| p_formula / (4.0 * PI * beta_abs));
    Ok(CatClosedForm { state, p_formula, direct_sum, p_success, theta, chi })
}

/// Every way of writing `n` as an ordered sum of `parts` non-negative
/// integers, with its multinomial coefficient `n! / Π m_i!`.
pub fn compositions(n: usize, parts: usize) -> Vec<(Vec<usize>, f64)> {
    fn walk(left: usize, slots: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if slots == 1 {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for first in 0..=left {
            cur.push(first);
            walk(left - first, slots - 1, cur, out);
            cur.pop();
        }
    }
    if parts == 0 {
        return if n == 0 { vec![(Vec::new(), 1.0)] } else { Vec::new() };
    }
    let mut all = Vec::new();
    walk(n, parts, &mut Vec::with_capacity(parts), &mut all);
    all.into_iter()
        .map(|m| {
            let ln = ln_fact(n) - m.iter().map(|&k| ln_fact(k)).sum::<f64>();
            (m, ln.exp().round())
        })
        .collect()
}

/// Mean field `⟨â⟩` of a conditioned state.
pub fn expectation_field(outcome: &FilterOutcome) -> C64 {
    outcome.state.expectation(Observable::Annihilation)
}
