//! Quantum states of light emitted by energy-modulated free electrons into a
//! single optical mode.
//!
//! All quantities are dimensionless: momenta in units of `ω₀/v`, positions in
//! units of `v/ω₀` and times in units of `1/ω₀`. Drift is given as a fraction
//! of the Talbot distance.

pub mod electron;
pub mod emission;
pub mod error;
pub mod fock;
pub mod oracle;
pub mod special;
pub mod synthesis;

pub use electron::{
    coherence_factor, coherence_factor_closed_drift, electron_wigner, iels_modulate, prefilter_cf,
    projected_coherence_factor, ElectronPulse, IelsStage, ModulationSpectrum, PreFilter, PrefilterForm,
    PrefilteredCf,
};
pub use emission::{
    cat_closed_form, emission_stats, emit_exact, emit_from_cf, emit_no_filter, emit_single_window,
    compositions, expectation_field, CatClosedForm, CfOrders, EmissionStats, FilterOutcome, PostFilter,
};
pub use error::{Error, Result};
pub use fock::{fidelity, trace_distance, Observable, PhotonicState, TargetState, WignerGrid};
pub use num_complex::Complex64;
pub use synthesis::{
    objective, optimize, ring_coefficients, Evaluation, Ring, RingProfile, SynthesisProblem, SynthesisResult,
};
