use thiserror::Error;

/// Failures reported by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty pre-filter: no populated sideband inside [{lo}, {hi}]")]
    EmptyPreFilter { lo: f64, hi: f64 },

    #[error("empty post-selection: success probability {p_success:e}")]
    EmptyPostSelection { p_success: f64 },

    #[error("truncation too small: n_max = {n_max} leaves tail mass {tail:e}")]
    TruncationTooSmall { n_max: usize, tail: f64 },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("unphysical CF input: G/I^2 = {g_ratio}, fluctuation = {fluct:e}")]
    UnphysicalCf { g_ratio: f64, fluct: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("series did not converge: {0}")]
    NotConverged(String),

    #[error("insufficient quadrature resolution: halving the step moved results by {drift:e}")]
    InsufficientResolution { drift: f64 },

    #[error("invalid state: {0}")]
    InvalidState(String),
}

pub type Result<T> = std::result::Result<T, Error>;
