use anyhow::{bail, Result};
use freelight::{ElectronPulse, IelsStage, ModulationSpectrum, SynthesisProblem, TargetState};
use serde::{Deserialize, Serialize};

/// `count` evenly spaced values from `start` to `stop` inclusive.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Grid {
    pub fn values(&self) -> Result<Vec<f64>> {
        if self.count == 0 || !self.start.is_finite() || !self.stop.is_finite() {
            bail!("grid needs finite bounds and at least one point");
        }
        if self.count == 1 {
            return Ok(vec![self.start]);
        }
        let step = (self.stop - self.start) / (self.count - 1) as f64;
        Ok((0..self.count).map(|i| self.start + step * i as f64).collect())
    }
}

fn default_harmonic() -> u32 {
    1
}

/// One electron: an IELS stage plus envelope. A missing `sigma_t` means an
/// infinitely long coherent pulse.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseConfig {
    pub stage: IelsStage,
    #[serde(default)]
    pub sigma_t: Option<f64>,
    #[serde(default)]
    pub delta_t: f64,
}

impl PulseConfig {
    pub fn spectrum(&self) -> Result<ModulationSpectrum> {
        Ok(freelight::iels_modulate(&self.stage)?)
    }

    pub fn pulse(&self) -> Result<ElectronPulse> {
        let spec = self.spectrum()?;
        Ok(match self.sigma_t {
            None if self.delta_t == 0.0 => ElectronPulse::coherent(spec),
            None => ElectronPulse::new(spec, f64::INFINITY, self.delta_t)?,
            Some(s) => ElectronPulse::new(spec, s, self.delta_t)?,
        })
    }
}

/// Momentum window before the sample: upper edge fixed, width scanned.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrefilterScan {
    pub delta_max: f64,
    pub delta_d: Grid,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CfConfig {
    pub beta_abs: Grid,
    pub drift: Grid,
    pub orders: Vec<i64>,
    #[serde(default)]
    pub beta_phase: f64,
    #[serde(default = "default_harmonic")]
    pub harmonic: u32,
    #[serde(default)]
    pub sigma_t: Option<f64>,
    #[serde(default)]
    pub delta_t: f64,
    #[serde(default)]
    pub prefilter: Option<PrefilterScan>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EmitFilter {
    #[default]
    None,
    /// Single electron only.
    Window { s: i64, delta_d: f64 },
    /// One sideband per electron; envelopes are ignored.
    Exact { s: Vec<i64> },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EmitScan {
    /// Post-selection window around sideband `s`, half-width scanned.
    Window { s: i64, delta_d: Grid },
    /// Pre-filter of fixed upper edge, width scanned; no post-selection.
    Prefilter { delta_max: f64, delta_d: Grid },
}

/// Wigner grids, evaluated at the listed scan values when a scan is present.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WignerPanels {
    pub x: Grid,
    pub p: Grid,
    #[serde(default)]
    pub at: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmitConfig {
    pub electrons: Vec<PulseConfig>,
    pub beta0: f64,
    #[serde(default)]
    pub filter: EmitFilter,
    #[serde(default)]
    pub n_max: Option<usize>,
    #[serde(default)]
    pub scan: Option<EmitScan>,
    #[serde(default)]
    pub wigner: Option<WignerPanels>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IelsScan {
    pub beta_abs: Grid,
    pub drift: Grid,
    #[serde(default)]
    pub sigma_t: Option<f64>,
    #[serde(default)]
    pub delta_t: f64,
}

/// Identical electrons with `M1 = i·m1_imag` and `M2 = m2_real`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CfPlane {
    pub m1_imag: Grid,
    pub m2_real: Grid,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StatsConfig {
    pub beta0: f64,
    pub n_electrons: Vec<usize>,
    #[serde(default)]
    pub iels: Option<IelsScan>,
    #[serde(default)]
    pub cf_plane: Option<CfPlane>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatPoint {
    pub beta_abs: f64,
    pub s: i64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatWigner {
    pub x: Grid,
    pub p: Grid,
    pub points: Vec<CatPoint>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatConfig {
    pub beta_abs: Grid,
    pub s: Vec<i64>,
    #[serde(default)]
    pub beta_phase: f64,
    pub beta0: f64,
    pub n_max_trunc: usize,
    #[serde(default)]
    pub wigner: Option<CatWigner>,
}

/// Target parameter values (`r`, or `|α|` at fixed phase) crossed with ring counts.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub values: Vec<f64>,
    pub rings: Vec<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridPair {
    pub x: Grid,
    pub p: Grid,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeConfig {
    pub problem: SynthesisProblem,
    #[serde(default)]
    pub sweep: Option<Sweep>,
    #[serde(default)]
    pub wigner: Option<GridPair>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WignerSource {
    Target { target: TargetState, n_max: usize },
    Emit { emit: EmitConfig },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WignerConfig {
    pub source: WignerSource,
    pub x: Grid,
    pub p: Grid,
}
