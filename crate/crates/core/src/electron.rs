//! Electron modulation states: sideband spectra, pulses with finite coherence
//! and jitter, coherence factors, electron Wigner functions and pre-filtering.

use std::f64::consts::{FRAC_1_PI, PI, SQRT_2};

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{bessel_j, bessel_j_array, erf, signed_order};

/// Complex sideband amplitudes `c_ℓ` stored densely on the fundamental lattice.
///
/// `amps[i]` is the amplitude at lattice index `offset + i`. For a harmonic `h`
/// stage only multiples of `h` are populated; the other sites hold zeros.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModulationSpectrum {
    offset: i64,
    amps: Vec<C64>,
    harmonic: u32,
}

impl ModulationSpectrum {
    pub fn new(offset: i64, amps: Vec<C64>, harmonic: u32) -> Result<Self> {
        if amps.is_empty() {
            return Err(Error::InvalidParameter("spectrum needs at least one amplitude".into()));
        }
        if harmonic == 0 {
            return Err(Error::InvalidParameter("harmonic must be at least 1".into()));
        }
        if amps.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::InvalidParameter("non-finite amplitude".into()));
        }
        Ok(Self { offset, amps, harmonic })
    }

    /// The trivial spectrum `c₀ = 1`.
    pub fn unmodulated() -> Self {
        Self { offset: 0, amps: vec![C64::new(1.0, 0.0)], harmonic: 1 }
    }

    pub fn offset(&self) -> i64 {
        self.offset
    }

    pub fn amps(&self) -> &[C64] {
        &self.amps
    }

    pub fn harmonic(&self) -> u32 {
        self.harmonic
    }

    /// Highest stored lattice index.
    pub fn max_index(&self) -> i64 {
        self.offset + self.amps.len() as i64 - 1
    }

    /// Amplitude at lattice index `l`, zero outside the stored range.
    #[inline]
    pub fn amp(&self, l: i64) -> C64 {
        let i = l - self.offset;
        if i < 0 || i >= self.amps.len() as i64 {
            C64::new(0.0, 0.0)
        } else {
            self.amps[i as usize]
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, C64)> + '_ {
        self.amps.iter().enumerate().map(move |(i, &c)| (self.offset + i as i64, c))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn normalize(mut self) -> Result<Self> {
        let n = self.norm_sqr();
        if n <= 0.0 {
            return Err(Error::InvalidParameter("cannot normalize an all-zero spectrum".into()));
        }
        let s = 1.0 / n.sqrt();
        for c in &mut self.amps {
            *c *= s;
        }
        Ok(self)
    }

    /// Multiply by the free-drift phase `e^{-2πi (ℓ/h)² d}`.
    pub fn with_drift(mut self, drift: f64) -> Self {
        let h = self.harmonic as i64;
        for (i, c) in self.amps.iter_mut().enumerate() {
            let l = self.offset + i as i64;
            if l % h != 0 {
                continue;
            }
            let stage = l / h;
            *c *= drift_phase(stage, drift);
        }
        self
    }

    /// `Σ_ℓ c_ℓ c*_{ℓ+m}`
    pub fn lag_sum(&self, m: i64) -> C64 {
        self.iter().map(|(l, c)| c * self.amp(l + m).conj()).sum()
    }

    /// `R(Δ) = Σ_ℓ c_ℓ c*_{ℓ-Δ}` for `Δ = -(len-1) ..= len-1`, stored at `Δ + len - 1`.
    pub fn lag_products(&self) -> Vec<C64> {
        let n = self.amps.len();
        let mut out = vec![C64::new(0.0, 0.0); 2 * n - 1];
        for (i, a) in self.amps.iter().enumerate() {
            for (j, b) in self.amps.iter().enumerate() {
                out[i + n - 1 - j] += a * b.conj();
            }
        }
        out
    }
}

/// `e^{-2πi ℓ² d}` with the argument reduced before the trig call.
#[inline]
pub(crate) fn drift_phase(stage: i64, drift: f64) -> C64 {
    let arg = ((stage * stage) as f64 * drift).rem_euclid(1.0);
    C64::from_polar(1.0, -2.0 * PI * arg)
}

/// A single inelastic electron-light scattering stage followed by free drift.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IelsStage {
    pub beta_abs: f64,
    /// `arg(-β)` in radians.
    #[serde(default)]
    pub beta_phase: f64,
    #[serde(default = "one")]
    pub harmonic: u32,
    /// Drift in units of the Talbot distance.
    #[serde(default)]
    pub drift: f64,
}

fn one() -> u32 {
    1
}

impl IelsStage {
    pub fn new(beta_abs: f64, beta_phase: f64, drift: f64) -> Self {
        Self { beta_abs, beta_phase, harmonic: 1, drift }
    }

    pub fn with_harmonic(mut self, harmonic: u32) -> Self {
        self.harmonic = harmonic;
        self
    }
}

/// Stage-index cutoff keeping every sideband with non-negligible weight.
pub fn iels_cutoff(beta_abs: f64) -> i64 {
    let x = 2.0 * beta_abs;
    (x + 10.0 * x.cbrt() + 10.0).ceil() as i64
}

pub fn iels_modulate(stage: &IelsStage) -> Result<ModulationSpectrum> {
    if !(stage.beta_abs >= 0.0) || !stage.beta_abs.is_finite() {
        return Err(Error::InvalidParameter(format!("beta_abs = {}", stage.beta_abs)));
    }
    if stage.harmonic == 0 {
        return Err(Error::InvalidParameter("harmonic must be at least 1".into()));
    }
    if !stage.drift.is_finite() || !stage.beta_phase.is_finite() {
        return Err(Error::InvalidParameter("non-finite phase or drift".into()));
    }
    if stage.beta_abs == 0.0 {
        return ModulationSpectrum::new(0, vec![C64::new(1.0, 0.0)], stage.harmonic);
    }
    let cut = iels_cutoff(stage.beta_abs);
    let jn = bessel_j_array(cut as usize, 2.0 * stage.beta_abs);
    let h = stage.harmonic as i64;
    let mut amps = vec![C64::new(0.0, 0.0); (2 * cut * h + 1) as usize];
    for l in -cut..=cut {
        let c = signed_order(&jn, l)
            * C64::from_polar(1.0, l as f64 * stage.beta_phase)
            * drift_phase(l, stage.drift);
        amps[(l * h + cut * h) as usize] = c;
    }
    ModulationSpectrum::new(-cut * h, amps, stage.harmonic)?.normalize()
}

/// Closed-form coherence factor of a drifted IELS electron with infinite
/// coherence time: `i^m sign(sin 2πmd)^m J_m(4|β sin 2πmd|)`.
pub fn coherence_factor_closed_drift(beta_abs: f64, drift: f64, m: i64) -> C64 {
    let s = (2.0 * PI * ((m as f64 * drift).rem_euclid(1.0))).sin();
    let sign = if s > 0.0 {
        1.0
    } else if s < 0.0 {
        -1.0
    } else {
        0.0
    };
    let sign_pow = if m == 0 {
        1.0
    } else if m.rem_euclid(2) == 0 {
        sign * sign
    } else {
        sign
    };
    let ipow = match m.rem_euclid(4) {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    };
    ipow * sign_pow * bessel_j(m, 4.0 * (beta_abs * s).abs())
}

/// A modulated electron with Gaussian coherent envelope (`sigma_t`) and Gaussian
/// arrival-time jitter (`delta_t`). `sigma_t = ∞` is the lattice limit.
#[derive(Clone, Debug)]
pub struct ElectronPulse {
    spectrum: ModulationSpectrum,
    sigma_t: f64,
    delta_t: f64,
    lags: Vec<C64>,
    norm: f64,
}

impl ElectronPulse {
    pub fn new(spectrum: ModulationSpectrum, sigma_t: f64, delta_t: f64) -> Result<Self> {
        if !(sigma_t > 0.0) {
            return Err(Error::InvalidParameter(format!("sigma_t = {sigma_t} must be positive")));
        }
        if !(delta_t >= 0.0) {
            return Err(Error::InvalidParameter(format!("delta_t = {delta_t} must be non-negative")));
        }
        let lags = spectrum.lag_products();
        let mut pulse = Self { spectrum, sigma_t, delta_t, lags, norm: 1.0 };
        let norm = pulse.raw_cf(0).re;
        if !(norm > 0.0) {
            return Err(Error::InvalidParameter("pulse has zero density".into()));
        }
        pulse.norm = norm;
        Ok(pulse)
    }

    /// Infinite coherence time, no jitter.
    pub fn coherent(spectrum: ModulationSpectrum) -> Self {
        Self::new(spectrum, f64::INFINITY, 0.0).expect("infinite-coherence pulse is always valid")
    }

    pub fn spectrum(&self) -> &ModulationSpectrum {
        &self.spectrum
    }

    pub fn sigma_t(&self) -> f64 {
        self.sigma_t
    }

    pub fn delta_t(&self) -> f64 {
        self.delta_t
    }

    /// `σ_t² + Δt²`
    pub fn total_width_sqr(&self) -> f64 {
        self.sigma_t * self.sigma_t + self.delta_t * self.delta_t
    }

    /// Trace of the unnormalized density, `Σ c_ℓ c*_ℓ' e^{-(ℓ-ℓ')²(σ²+Δt²)/2}`.
    pub fn density_norm(&self) -> f64 {
        self.norm
    }

    /// `e^{-κ²(σ²+Δt²)/2}` with the infinite-width limit handled exactly.
    #[inline]
    pub fn overlap_weight(&self, kappa: i64) -> f64 {
        lattice_weight(kappa, self.total_width_sqr())
    }

    fn raw_cf(&self, m: i64) -> C64 {
        let n = self.spectrum.amps.len() as i64;
        let w = self.total_width_sqr();
        if w.is_infinite() {
            let d = -m;
            if d.abs() >= n {
                return C64::new(0.0, 0.0);
            }
            return self.lags[(d + n - 1) as usize];
        }
        self.lags
            .iter()
            .enumerate()
            .map(|(i, r)| r * lattice_weight(i as i64 - (n - 1) + m, w))
            .sum()
    }
}

#[inline]
pub(crate) fn lattice_weight(kappa: i64, width_sqr: f64) -> f64 {
    if kappa == 0 {
        1.0
    } else if width_sqr.is_infinite() {
        0.0
    } else {
        (-(kappa * kappa) as f64 * width_sqr / 2.0).exp()
    }
}

/// `M_m = Σ c_ℓ c*_ℓ' e^{-(ℓ-ℓ'+m)²(σ²+Δt²)/2}`, normalized by the `m = 0` value.
pub fn coherence_factor(pulse: &ElectronPulse, m: i64) -> C64 {
    pulse.raw_cf(m) / pulse.norm
}

fn require_finite_sigma(pulse: &ElectronPulse) -> Result<()> {
    if pulse.sigma_t.is_finite() && pulse.delta_t.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter("operation needs a finite coherence time and jitter".into()))
    }
}

/// Projected coherence factor `PM_m(q)`; its integral over `q` is `M_m`.
pub fn projected_coherence_factor(pulse: &ElectronPulse, m: i64, q: f64) -> Result<C64> {
    require_finite_sigma(pulse)?;
    let s2 = pulse.sigma_t * pulse.sigma_t;
    let w = pulse.total_width_sqr();
    let mut acc = C64::new(0.0, 0.0);
    for (l, c) in pulse.spectrum.iter() {
        if c.norm_sqr() == 0.0 {
            continue;
        }
        for (lp, cp) in pulse.spectrum.iter() {
            let g = lattice_weight(l - lp + m, w);
            if g == 0.0 {
                continue;
            }
            let dq = q - 0.5 * (l + lp) as f64;
            acc += c * cp.conj() * (g * (-2.0 * s2 * dq * dq).exp());
        }
    }
    Ok(acc * (2.0 * s2 / PI).sqrt() / pulse.norm)
}

/// Electron Wigner function `W(z, q)` on a grid; rows follow `zs`, columns `qs`.
pub fn electron_wigner(pulse: &ElectronPulse, zs: &[f64], qs: &[f64]) -> Result<DMatrix<f64>> {
    require_finite_sigma(pulse)?;
    if zs.iter().chain(qs).any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("grid values must be finite".into()));
    }
    let s2 = pulse.sigma_t * pulse.sigma_t;
    let w = pulse.total_width_sqr();
    let pairs: Vec<(f64, i64, C64)> = pulse
        .spectrum
        .iter()
        .flat_map(|(l, c)| pulse.spectrum.iter().map(move |(lp, cp)| (l, c, lp, cp)))
        .filter(|(_, c, _, cp)| c.norm_sqr() > 0.0 && cp.norm_sqr() > 0.0)
        .map(|(l, c, lp, cp)| (0.5 * (l + lp) as f64, l - lp, c * cp.conj()))
        .collect();
    let mut out = DMatrix::zeros(zs.len(), qs.len());
    for (iz, &z) in zs.iter().enumerate() {
        let env = (s2 / w).sqrt() * (-z * z / (2.0 * w)).exp();
        for (iq, &q) in qs.iter().enumerate() {
            let mut acc = 0.0;
            for &(mid, diff, prod) in &pairs {
                let dq = q - mid;
                let phase = C64::from_polar(1.0, diff as f64 * z);
                acc += (prod * phase).re * (-2.0 * s2 * dq * dq).exp();
            }
            out[(iz, iq)] = FRAC_1_PI * env * acc / pulse.norm;
        }
    }
    Ok(out)
}

/// Momentum window `[delta_max - delta_d, delta_max]` applied before the sample.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreFilter {
    pub delta_max: f64,
    pub delta_d: f64,
}

impl PreFilter {
    pub fn new(delta_max: f64, delta_d: f64) -> Result<Self> {
        if !(delta_d > 0.0) || !delta_max.is_finite() || !delta_d.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "pre-filter needs finite edges and a positive width, got delta_max = {delta_max}, delta_d = {delta_d}"
            )));
        }
        Ok(Self { delta_max, delta_d })
    }

    /// First and last lattice index inside the closed window.
    pub fn index_range(&self) -> (i64, i64) {
        ((self.delta_max - self.delta_d).ceil() as i64, self.delta_max.floor() as i64)
    }
}

/// Which pre-filter expression to evaluate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PrefilterForm {
    /// Sharp window on the lattice, infinite coherence time.
    Lattice,
    /// Gaussian envelope and jitter with error-function window edges.
    Finite { sigma_t: f64, delta_t: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PrefilteredCf {
    pub cf: C64,
    /// Probability that the electron survives the filter.
    pub success: f64,
}

pub fn prefilter_cf(
    spectrum: &ModulationSpectrum,
    filter: &PreFilter,
    m: i64,
    form: PrefilterForm,
) -> Result<PrefilteredCf> {
    PreFilter::new(filter.delta_max, filter.delta_d)?;
    match form {
        PrefilterForm::Lattice => prefilter_lattice(spectrum, filter, m),
        PrefilterForm::Finite { sigma_t, delta_t } => {
            prefilter_finite(spectrum, filter, m, sigma_t, delta_t)
        }
    }
}

const EMPTY_FILTER: f64 = 1e-30;

fn prefilter_lattice(spectrum: &ModulationSpectrum, filter: &PreFilter, m: i64) -> Result<PrefilteredCf> {
    let (lo, hi) = filter.index_range();
    let empty = || Error::EmptyPreFilter { lo: filter.delta_max - filter.delta_d, hi: filter.delta_max };
    if lo > hi {
        return Err(empty());
    }
    let first = lo.max(spectrum.offset());
    let last = hi.min(spectrum.max_index());
    let kept: f64 = (first..=last).map(|l| spectrum.amp(l).norm_sqr()).sum();
    if kept < EMPTY_FILTER {
        return Err(empty());
    }
    let start = lo - m.min(0);
    let end = hi - m.max(0);
    let raw: C64 = (start.max(spectrum.offset())..=end.min(spectrum.max_index()))
        .map(|l| spectrum.amp(l) * spectrum.amp(l + m).conj())
        .sum();
    Ok(PrefilteredCf { cf: raw / kept, success: kept / spectrum.norm_sqr() })
}

fn prefilter_finite(
    spectrum: &ModulationSpectrum,
    filter: &PreFilter,
    m: i64,
    sigma_t: f64,
    delta_t: f64,
) -> Result<PrefilteredCf> {
    if !(sigma_t > 0.0 && sigma_t.is_finite()) || !(delta_t >= 0.0 && delta_t.is_finite()) {
        return Err(Error::InvalidParameter("finite pre-filter form needs finite sigma_t and delta_t".into()));
    }
    let w = sigma_t * sigma_t + delta_t * delta_t;
    let raw = |k: i64| -> C64 {
        if (k as f64).abs() > filter.delta_d {
            return C64::new(0.0, 0.0);
        }
        let kp = k.max(0) as f64;
        let km = k.min(0) as f64;
        let scale = sigma_t / SQRT_2;
        let mut acc = C64::new(0.0, 0.0);
        for (l, c) in spectrum.iter() {
            if c.norm_sqr() == 0.0 {
                continue;
            }
            for (lp, cp) in spectrum.iter() {
                let g = lattice_weight(l - lp + k, w);
                if g == 0.0 || cp.norm_sqr() == 0.0 {
                    continue;
                }
                let kk = (l + lp - k) as f64;
                let a = (2.0 * filter.delta_max - 2.0 * kp - kk) * scale;
                let b = (kk + 2.0 * km - 2.0 * filter.delta_max + 2.0 * filter.delta_d) * scale;
                acc += c * cp.conj() * (g * (erf(a) + erf(b)));
            }
        }
        acc * 0.5
    };
    let m0 = raw(0).re;
    if m0 < EMPTY_FILTER {
        return Err(Error::EmptyPreFilter { lo: filter.delta_max - filter.delta_d, hi: filter.delta_max });
    }
    let cf = if m == 0 { C64::new(1.0, 0.0) } else { raw(m) / m0 };
    let total: f64 = spectrum
        .lag_products()
        .iter()
        .enumerate()
        .map(|(i, r)| r.re * lattice_weight(i as i64 - (spectrum.amps.len() as i64 - 1), w))
        .sum();
    Ok(PrefilteredCf { cf, success: m0 / total })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_stage_is_unmodulated() {
        let s = iels_modulate(&IelsStage::new(0.0, 1.3, 0.2)).unwrap();
        assert_eq!(s.amps().len(), 1);
        assert_eq!(s.amp(0), C64::new(1.0, 0.0));
    }

    #[test]
    fn harmonic_two_occupies_even_sites() {
        let s = iels_modulate(&IelsStage::new(1.5, 0.4, 0.1).with_harmonic(2)).unwrap();
        for (l, c) in s.iter() {
            if l % 2 != 0 {
                assert_eq!(c, C64::new(0.0, 0.0));
            }
        }
        assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
        // stage index 1 sits at lattice index 2
        let j1 = bessel_j(1, 3.0);
        let expected = j1 * C64::from_polar(1.0, 0.4) * drift_phase(1, 0.1);
        assert!((s.amp(2) - expected).norm() < 1e-13);
    }

    #[test]
    fn lag_products_match_lag_sum() {
        let s = iels_modulate(&IelsStage::new(1.2, 0.3, 0.17)).unwrap();
        let lags = s.lag_products();
        let n = s.amps().len() as i64;
        for m in -4..=4 {
            let direct = s.lag_sum(m);
            assert!((lags[(-m + n - 1) as usize] - direct).norm() < 1e-14);
        }
    }

    #[test]
    fn closed_drift_is_hermitian_in_order() {
        for &(b, d) in &[(0.7, 0.13), (2.5, 0.31), (4.0, 0.77)] {
            for m in 1..4 {
                let p = coherence_factor_closed_drift(b, d, m);
                let n = coherence_factor_closed_drift(b, d, -m);
                assert!((p - n.conj()).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn unmodulated_pcf_is_gaussian() {
        let pulse = ElectronPulse::new(ModulationSpectrum::unmodulated(), 2.0, 0.5).unwrap();
        let sd = 1.0 / (2.0 * 2.0);
        for &q in &[-0.3_f64, 0.0, 0.1, 0.45] {
            let expected = (-q * q / (2.0 * sd * sd)).exp() / (sd * (2.0 * PI).sqrt());
            let got = projected_coherence_factor(&pulse, 0, q).unwrap();
            assert!((got.re - expected).abs() < 1e-12 && got.im.abs() < 1e-15);
        }
    }

    #[test]
    fn prefilter_index_range_is_closed() {
        let f = PreFilter::new(50.0, 3.0).unwrap();
        assert_eq!(f.index_range(), (47, 50));
        let f = PreFilter::new(49.5, 2.0).unwrap();
        assert_eq!(f.index_range(), (48, 49));
    }

    #[test]
    fn prefilter_outside_support_is_an_error() {
        let s = iels_modulate(&IelsStage::new(1.0, 0.0, 0.0)).unwrap();
        let f = PreFilter::new(200.0, 5.0).unwrap();
        assert!(matches!(
            prefilter_cf(&s, &f, 1, PrefilterForm::Lattice),
            Err(Error::EmptyPreFilter { .. })
        ));
        let f = PreFilter::new(0.6, 0.2).unwrap();
        assert!(matches!(
            prefilter_cf(&s, &f, 0, PrefilterForm::Lattice),
            Err(Error::EmptyPreFilter { .. })
        ));
    }
}
