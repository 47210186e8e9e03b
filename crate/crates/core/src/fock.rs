//! Truncated Fock-space states of the optical mode.

use std::f64::consts::FRAC_2_PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{coherent_amplitude, ln_fact};

pub const HERMITIAN_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-10;
pub const PSD_TOL: f64 = 1e-9;
pub const TAIL_TOL: f64 = 1e-8;

/// Truncation used when the caller does not pick one: `10·max(1, β₀²) + 20`.
pub fn default_n_max(beta0: f64) -> usize {
    (10.0 * (beta0 * beta0).max(1.0) + 20.0).ceil() as usize
}

/// State of the optical mode on photon numbers `0 ..= n_max`.
#[derive(Clone, Debug, PartialEq)]
pub enum PhotonicState {
    Pure(DVector<C64>),
    Mixed(DMatrix<C64>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    /// `n̂`
    Number,
    /// `n̂²`
    NumberSquared,
    /// `â`
    Annihilation,
    /// `â†²â²`
    PairCorrelation,
}

impl PhotonicState {
    /// Normalized pure state; fails on a zero vector.
    pub fn pure_normalized(amps: DVector<C64>) -> Result<Self> {
        let n = amps.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::InvalidState("pure state has zero or non-finite norm".into()));
        }
        Ok(Self::Pure(amps / C64::new(n, 0.0)))
    }

    /// Density matrix normalized by its trace and checked for validity.
    pub fn mixed_normalized(rho: DMatrix<C64>) -> Result<Self> {
        let tr = rho.trace().re;
        if !(tr > 0.0) || !tr.is_finite() {
            return Err(Error::InvalidState(format!("trace {tr} is not positive")));
        }
        let s = Self::Mixed(rho / C64::new(tr, 0.0));
        s.validate()?;
        Ok(s)
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Pure(v) => v.len(),
            Self::Mixed(m) => m.nrows(),
        }
    }

    pub fn n_max(&self) -> usize {
        self.dim() - 1
    }

    pub fn is_pure_variant(&self) -> bool {
        matches!(self, Self::Pure(_))
    }

    pub fn density(&self) -> DMatrix<C64> {
        match self {
            Self::Pure(v) => v * v.adjoint(),
            Self::Mixed(m) => m.clone(),
        }
    }

    /// Photon-number populations `ρ_nn`.
    pub fn populations(&self) -> Vec<f64> {
        match self {
            Self::Pure(v) => v.iter().map(|a| a.norm_sqr()).collect(),
            Self::Mixed(m) => (0..m.nrows()).map(|i| m[(i, i)].re).collect(),
        }
    }

    /// Zero-pad (or refuse to cut) to `dim` levels.
    pub fn padded(&self, dim: usize) -> Result<Self> {
        let cur = self.dim();
        if dim < cur {
            return Err(Error::DimensionMismatch { left: cur, right: dim });
        }
        Ok(match self {
            Self::Pure(v) => {
                let mut out = DVector::zeros(dim);
                out.rows_mut(0, cur).copy_from(v);
                Self::Pure(out)
            }
            Self::Mixed(m) => {
                let mut out = DMatrix::zeros(dim, dim);
                out.view_mut((0, 0), (cur, cur)).copy_from(m);
                Self::Mixed(out)
            }
        })
    }

    /// Checks normalization, hermiticity and positivity.
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Pure(v) => {
                let n = v.norm_squared();
                if (n - 1.0).abs() > TRACE_TOL {
                    return Err(Error::InvalidState(format!("pure norm {n}")));
                }
            }
            Self::Mixed(m) => {
                let herm = hermiticity_defect(m);
                if herm > HERMITIAN_TOL {
                    return Err(Error::InvalidState(format!("hermiticity defect {herm:e}")));
                }
                let tr = m.trace();
                if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
                    return Err(Error::InvalidState(format!("trace {tr}")));
                }
                let low = min_eigenvalue(m);
                if !(low >= -PSD_TOL) {
                    return Err(Error::InvalidState(format!("eigenvalue {low:e}")));
                }
            }
        }
        Ok(())
    }

    /// `Tr ρ²`
    pub fn purity(&self) -> f64 {
        match self {
            Self::Pure(v) => v.norm_squared().powi(2),
            Self::Mixed(m) => m.iter().map(|z| z.norm_sqr()).sum(),
        }
    }

    pub fn expectation(&self, op: Observable) -> C64 {
        let pops = self.populations();
        match op {
            Observable::Number => pops.iter().enumerate().map(|(n, p)| n as f64 * p).sum::<f64>().into(),
            Observable::NumberSquared => {
                pops.iter().enumerate().map(|(n, p)| (n * n) as f64 * p).sum::<f64>().into()
            }
            Observable::PairCorrelation => pops
                .iter()
                .enumerate()
                .map(|(n, p)| (n as f64) * (n as f64 - 1.0) * p)
                .sum::<f64>()
                .into(),
            Observable::Annihilation => {
                let elem = |m: usize| -> C64 {
                    match self {
                        Self::Pure(v) => v[m] * v[m - 1].conj(),
                        Self::Mixed(r) => r[(m, m - 1)],
                    }
                };
                (1..self.dim()).map(|m| elem(m) * (m as f64).sqrt()).sum()
            }
        }
    }

    /// Wigner function `W(α) = (2/π) Tr[ρ D(2α) Π]` with `α = (x + ip)/√2`.
    pub fn wigner(&self, xs: &[f64], ps: &[f64]) -> Result<WignerGrid> {
        if xs.iter().chain(ps).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("Wigner grid values must be finite".into()));
        }
        let rho = self.density();
        let mut values = DMatrix::zeros(xs.len(), ps.len());
        for (i, &x) in xs.iter().enumerate() {
            for (j, &p) in ps.iter().enumerate() {
                values[(i, j)] = wigner_point(&rho, x, p);
            }
        }
        Ok(WignerGrid { xs: xs.to_vec(), ps: ps.to_vec(), values })
    }
}

/// `max |ρ - ρ†|`
pub fn hermiticity_defect(m: &DMatrix<C64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Sorted eigenvalues of a hermitian matrix.
///
/// Entries more than forty orders of magnitude below the largest are flushed to
/// zero first, since the solver returns NaN on some matrices spanning hundreds
/// of orders. The eigenvalue shift this causes is far below any tolerance used.
pub fn eigenvalues(m: &DMatrix<C64>) -> Vec<f64> {
    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if !(scale > 0.0) || !scale.is_finite() {
        return vec![if scale == 0.0 { 0.0 } else { f64::NAN }; m.nrows()];
    }
    let floor = 1e-40;
    let scaled = m.map(|z| {
        let v = z / scale;
        if v.norm() < floor { C64::new(0.0, 0.0) } else { v }
    });
    let mut ev: Vec<f64> = scaled.symmetric_eigenvalues().iter().map(|l| l * scale).collect();
    ev.sort_by(f64::total_cmp);
    ev
}

pub fn min_eigenvalue(m: &DMatrix<C64>) -> f64 {
    eigenvalues(m).first().copied().unwrap_or(0.0)
}

/// Uhlmann fidelity `(Tr √(√ρ σ √ρ))²`, which is `|⟨a|b⟩|²` for pure states.
pub fn fidelity(a: &PhotonicState, b: &PhotonicState) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { left: a.dim(), right: b.dim() });
    }
    match (a, b) {
        (PhotonicState::Pure(u), PhotonicState::Pure(v)) => Ok(u.dotc(v).norm_sqr()),
        (PhotonicState::Pure(u), PhotonicState::Mixed(r)) | (PhotonicState::Mixed(r), PhotonicState::Pure(u)) => {
            Ok(u.dotc(&(r * u)).re)
        }
        (PhotonicState::Mixed(r), PhotonicState::Mixed(q)) => {
            let root = hermitian_sqrt(r);
            let inner = &root * q * &root;
            let inner = (&inner + inner.adjoint()) * C64::new(0.5, 0.0);
            let ev = inner.symmetric_eigenvalues();
            // rounding noise below this floor would otherwise contribute √ε each
            let floor = 1e-14 * ev.max().max(0.0);
            let tr: f64 = ev.iter().filter(|l| **l > floor).map(|l| l.sqrt()).sum();
            Ok(tr * tr)
        }
    }
}

fn hermitian_sqrt(m: &DMatrix<C64>) -> DMatrix<C64> {
    let eig = m.clone().symmetric_eigen();
    let roots = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| C64::new(l.max(0.0).sqrt(), 0.0)));
    &eig.eigenvectors * roots * eig.eigenvectors.adjoint()
}

/// `½ Σ |λ(ρ - σ)|`
pub fn trace_distance(a: &PhotonicState, b: &PhotonicState) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { left: a.dim(), right: b.dim() });
    }
    let diff = a.density() - b.density();
    Ok(0.5 * eigenvalues(&diff).iter().map(|l| l.abs()).sum::<f64>())
}

/// `S_n = √(n!/(n+k)!) |γ|^k e^{-|γ|²/2} L_n^{(k)}(|γ|²)` for `n = 0 .. len`.
fn laguerre_ladder(k: usize, rad: f64, len: usize) -> Vec<f64> {
    let xx = rad * rad;
    let kf = k as f64;
    let start = if k == 0 {
        (-xx / 2.0).exp()
    } else if rad == 0.0 {
        0.0
    } else {
        (kf * rad.ln() - 0.5 * ln_fact(k) - xx / 2.0).exp()
    };
    let mut out = Vec::with_capacity(len);
    let mut prev = 0.0;
    let mut cur = start;
    for n in 0..len {
        out.push(cur);
        let nf = n as f64;
        let next = ((2.0 * nf + 1.0 + kf - xx) * cur - (nf * (nf + kf)).sqrt() * prev)
            / ((nf + 1.0) * (nf + kf + 1.0)).sqrt();
        prev = cur;
        cur = next;
    }
    out
}

/// Matrix elements `⟨m|D(γ)|n⟩` of the displacement operator for `m, n < dim`.
pub fn displacement_matrix(gamma: C64, dim: usize) -> DMatrix<C64> {
    let rad = gamma.norm();
    let unit = if rad > 0.0 { gamma / rad } else { C64::new(1.0, 0.0) };
    let mut out = DMatrix::zeros(dim, dim);
    let mut up = C64::new(1.0, 0.0);
    let mut down = C64::new(1.0, 0.0);
    for k in 0..dim {
        let ladder = laguerre_ladder(k, rad, dim - k);
        for (n, &v) in ladder.iter().enumerate() {
            out[(n + k, n)] = up * v;
            if k > 0 {
                out[(n, n + k)] = down * v;
            }
        }
        up *= unit;
        down *= -unit.conj();
    }
    out
}

fn wigner_point(rho: &DMatrix<C64>, x: f64, p: f64) -> f64 {
    let dim = rho.nrows();
    let gamma = C64::new(x, p) * std::f64::consts::SQRT_2;
    let rad = gamma.norm();
    let unit = if rad > 0.0 { gamma / rad } else { C64::new(1.0, 0.0) };
    let mut total = 0.0;
    let mut phase = C64::new(1.0, 0.0);
    for k in 0..dim {
        let ladder = laguerre_ladder(k, rad, dim - k);
        for (n, &v) in ladder.iter().enumerate() {
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            let elem = rho[(n, n + k)];
            total += sign * v * if k == 0 { elem.re } else { 2.0 * (elem * phase).re };
        }
        phase *= unit;
    }
    FRAC_2_PI * total
}

/// Wigner function sampled on a rectangular grid; rows follow `xs`, columns `ps`.
#[derive(Clone, Debug, PartialEq)]
pub struct WignerGrid {
    pub xs: Vec<f64>,
    pub ps: Vec<f64>,
    pub values: DMatrix<f64>,
}

fn spacing(axis: &[f64]) -> f64 {
    if axis.len() < 2 {
        1.0
    } else {
        (axis[axis.len() - 1] - axis[0]) / (axis.len() - 1) as f64
    }
}

impl WignerGrid {
    /// Phase-space integral `∫ W d²α = ½ ∫ W dx dp` on a uniform grid; equals
    /// the trace when the grid encloses the state.
    pub fn normalization(&self) -> f64 {
        0.5 * spacing(&self.xs) * spacing(&self.ps) * self.values.sum()
    }

    /// Quadrature distribution of `x̂ = (â + â†)/√2`.
    pub fn x_marginal(&self) -> Vec<f64> {
        let dp = spacing(&self.ps);
        (0..self.xs.len()).map(|i| 0.5 * dp * self.values.row(i).sum()).collect()
    }

    pub fn min(&self) -> f64 {
        self.values.min()
    }

    pub fn max(&self) -> f64 {
        self.values.max()
    }
}

/// States the synthesis targets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetState {
    SqueezedVacuum { r: f64 },
    Cat { alpha: C64, theta: f64 },
    TriangularCat { alpha: C64, theta: f64 },
    Custom { amps: Vec<C64> },
}

fn coherent_complex(n: usize, alpha: C64) -> C64 {
    let rad = alpha.norm();
    if rad == 0.0 {
        return C64::new(if n == 0 { 1.0 } else { 0.0 }, 0.0);
    }
    C64::from_polar(coherent_amplitude(n, rad), n as f64 * alpha.arg())
}

impl TargetState {
    /// Unnormalized amplitude of `|n⟩`.
    fn raw_amp(&self, n: usize) -> C64 {
        match self {
            Self::SqueezedVacuum { r } => {
                if n % 2 == 1 {
                    return C64::new(0.0, 0.0);
                }
                let k = n / 2;
                let t = r.tanh();
                if t == 0.0 {
                    return C64::new(if k == 0 { 1.0 } else { 0.0 }, 0.0);
                }
                let mag = (k as f64 * t.abs().ln() + 0.5 * ln_fact(2 * k)
                    - k as f64 * std::f64::consts::LN_2
                    - ln_fact(k)
                    - 0.5 * r.cosh().ln())
                .exp();
                let negative = t > 0.0 && k % 2 == 1;
                C64::new(if negative { -mag } else { mag }, 0.0)
            }
            Self::Cat { alpha, theta } => {
                let parity = if n % 2 == 0 { 1.0 } else { -1.0 };
                coherent_complex(n, *alpha) * (C64::new(1.0, 0.0) + C64::from_polar(parity, *theta))
            }
            Self::TriangularCat { alpha, theta } => {
                let w = C64::from_polar(1.0, n as f64 * theta);
                coherent_complex(n, *alpha) * (C64::new(1.0, 0.0) + w + w * w)
            }
            Self::Custom { amps } => amps.get(n).copied().unwrap_or_default(),
        }
    }

    /// Squared norm of the untruncated state.
    fn full_norm(&self) -> f64 {
        match self {
            Self::SqueezedVacuum { .. } => 1.0,
            Self::Cat { alpha, theta } => 2.0 + 2.0 * theta.cos() * (-2.0 * alpha.norm_sqr()).exp(),
            Self::TriangularCat { alpha, theta } => {
                let a2 = alpha.norm_sqr();
                let gen = |t: f64| (C64::from_polar(a2, t) - a2).exp().re;
                3.0 + 4.0 * gen(*theta) + 2.0 * gen(2.0 * theta)
            }
            Self::Custom { amps } => amps.iter().map(|a| a.norm_sqr()).sum(),
        }
    }

    /// Normalized amplitudes on `0 ..= n_max`, refusing truncations that drop
    /// more than `1e-8` of the norm.
    pub fn state(&self, n_max: usize) -> Result<PhotonicState> {
        let amps = DVector::from_iterator(n_max + 1, (0..=n_max).map(|n| self.raw_amp(n)));
        let full = self.full_norm();
        if !(full > 0.0) {
            return Err(Error::InvalidParameter("target state has zero norm".into()));
        }
        let kept = amps.norm_squared();
        let tail = ((full - kept) / full).max(0.0);
        if tail > TAIL_TOL {
            return Err(Error::TruncationTooSmall { n_max, tail });
        }
        PhotonicState::pure_normalized(amps)
    }

    /// The first `n_keep + 1` amplitudes, renormalized and zero-padded to `dim`.
    pub fn truncated(&self, n_keep: usize, dim: usize) -> Result<PhotonicState> {
        if dim < n_keep + 1 {
            return Err(Error::DimensionMismatch { left: n_keep + 1, right: dim });
        }
        let amps = DVector::from_iterator(dim, (0..dim).map(|n| if n <= n_keep { self.raw_amp(n) } else { C64::default() }));
        PhotonicState::pure_normalized(amps)
    }
}

/// Coherent state `|α⟩` truncated at `n_max` (not renormalized).
pub fn coherent_state(alpha: C64, n_max: usize) -> DVector<C64> {
    DVector::from_iterator(n_max + 1, (0..=n_max).map(|n| coherent_complex(n, alpha)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn fock(n: usize, dim: usize) -> PhotonicState {
        let mut v = DVector::zeros(dim);
        v[n] = C64::new(1.0, 0.0);
        PhotonicState::Pure(v)
    }

    #[test]
    fn wigner_vacuum_and_one_photon_at_origin() {
        let w0 = fock(0, 4).wigner(&[0.0], &[0.0]).unwrap();
        assert!((w0.values[(0, 0)] - 2.0 / PI).abs() < 1e-14);
        let w1 = fock(1, 4).wigner(&[0.0], &[0.0]).unwrap();
        assert!((w1.values[(0, 0)] + 2.0 / PI).abs() < 1e-14);
    }

    #[test]
    fn vacuum_wigner_is_gaussian() {
        let w = fock(0, 3).wigner(&[0.7], &[-0.4]).unwrap();
        let expected = 2.0 / PI * (-(0.49 + 0.16_f64)).exp();
        assert!((w.values[(0, 0)] - expected).abs() < 1e-14);
    }

    #[test]
    fn expectations_of_fock_one() {
        let s = fock(1, 5);
        assert!((s.expectation(Observable::NumberSquared).re - 1.0).abs() < 1e-15);
        assert_eq!(s.expectation(Observable::Annihilation), C64::new(0.0, 0.0));
    }

    #[test]
    fn truncation_guard_fires() {
        let t = TargetState::Cat { alpha: C64::new(3.0, 0.0), theta: 0.0 };
        assert!(matches!(t.state(10), Err(Error::TruncationTooSmall { .. })));
        assert!(t.state(60).is_ok());
    }

    #[test]
    fn maximally_mixed_purity() {
        let d = 7;
        let rho = DMatrix::from_diagonal_element(d, d, C64::new(1.0 / d as f64, 0.0));
        let s = PhotonicState::mixed_normalized(rho).unwrap();
        assert!((s.purity() - 1.0 / d as f64).abs() < 1e-15);
    }

    #[test]
    fn displacement_of_vacuum_is_coherent() {
        let g = C64::new(0.8, -0.5);
        let d = displacement_matrix(g, 30);
        let col = d.column(0).into_owned();
        let expected = coherent_state(g, 29);
        assert!((col - expected).norm() < 1e-13);
    }

    #[test]
    fn padding_preserves_amplitudes() {
        let s = TargetState::SqueezedVacuum { r: 0.3 }.state(40).unwrap();
        let p = s.padded(50).unwrap();
        assert_eq!(p.dim(), 50);
        assert!((fidelity(&s.padded(50).unwrap(), &p).unwrap() - 1.0).abs() < 1e-14);
        assert!(s.padded(10).is_err());
    }
}
