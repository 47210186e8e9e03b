//! Shared inputs for the benchmarks.

use freelight::{iels_modulate, ElectronPulse, IelsStage, ModulationSpectrum};

pub fn iels_spectrum(beta_abs: f64, drift: f64) -> ModulationSpectrum {
    iels_modulate(&IelsStage::new(beta_abs, 0.0, drift)).expect("valid stage")
}

pub fn gaussian_pulse(beta_abs: f64, sigma_t: f64, delta_t: f64) -> ElectronPulse {
    ElectronPulse::new(iels_spectrum(beta_abs, 0.0), sigma_t, delta_t).expect("valid pulse")
}
