//! Run configuration: JSON file plus command-line overrides, flags winning.

use std::path::{Path, PathBuf};

use crate::kinetics::ZeroFieldRates;
use crate::resonance::DEFAULT_WINDOW;
use crate::spin_model::SpinSystemParams;
use crate::{NvError, Result};

/// Env var consulted when no --config flag is given.
pub const CONFIG_ENV_VAR: &str = "NVKIN_CONFIG";

/// Everything a command needs; every field has a default so a config file may
/// specify any subset.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub spin: SpinSystemParams,
    pub rates: ZeroFieldRates,
    /// Microwave drive frequency, Hz.
    pub mw_frequency: f64,
    /// Field search window (low, high), T.
    pub field_window: (f64, f64),
    /// Polar angles for sweeps, degrees.
    pub theta_grid_deg: Vec<f64>,
    /// Laser intensities for sweeps, W/m^2.
    pub intensity_grid: Vec<f64>,
    /// Fixed polar angle (power-mode sweeps, spectra), degrees.
    pub theta_deg: f64,
    /// Fixed laser intensity (theta-mode sweeps, spectra), W/m^2.
    pub intensity: f64,
    /// Lorentzian component fwhm for synthetic spectra, T.
    pub linewidth: f64,
    /// Samples per synthetic spectrum.
    pub spectrum_points: usize,
    /// Worker threads; None means the number of processors.
    pub jobs: Option<usize>,
    /// Data sink; None means standard output.
    pub output_path: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            spin: SpinSystemParams::default(),
            rates: ZeroFieldRates::default(),
            mw_frequency: 9.43e9,
            field_window: DEFAULT_WINDOW,
            theta_grid_deg: (0..=90).map(f64::from).collect(),
            // 0-83 mW/mm^2 in 1 mW/mm^2 steps, SI.
            intensity_grid: (0..=83).map(|i| 1e3 * f64::from(i)).collect(),
            theta_deg: 0.0,
            intensity: 8.3e4,
            linewidth: 2e-6,
            spectrum_points: 4000,
            jobs: None,
            output_path: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.spin.validate()?;
        self.rates.validate()?;
        if !(self.mw_frequency > 0.0) {
            return Err(NvError::InvalidParameter(format!(
                "mw_frequency must be positive, got {}",
                self.mw_frequency
            )));
        }
        let (lo, hi) = self.field_window;
        if !(lo >= 0.0 && hi > lo) {
            return Err(NvError::InvalidParameter(format!(
                "field_window must satisfy 0 <= low < high, got ({lo}, {hi})"
            )));
        }
        if self.theta_grid_deg.is_empty() || self.intensity_grid.is_empty() {
            return Err(NvError::InvalidParameter("sweep grids must be non-empty".into()));
        }
        for &t in &self.theta_grid_deg {
            if !(0.0..=90.0).contains(&t) {
                return Err(NvError::InvalidParameter(format!(
                    "theta grid entry {t} outside [0, 90] degrees"
                )));
            }
        }
        for &p in &self.intensity_grid {
            if !(p >= 0.0 && p.is_finite()) {
                return Err(NvError::InvalidParameter(format!(
                    "intensity grid entry {p} must be finite and >= 0"
                )));
            }
        }
        if !(0.0..=90.0).contains(&self.theta_deg) {
            return Err(NvError::InvalidParameter(format!(
                "theta_deg {} outside [0, 90]",
                self.theta_deg
            )));
        }
        if !(self.intensity >= 0.0 && self.intensity.is_finite()) {
            return Err(NvError::InvalidParameter(format!(
                "intensity must be finite and >= 0, got {}",
                self.intensity
            )));
        }
        if !(self.linewidth > 0.0) {
            return Err(NvError::InvalidParameter(format!(
                "linewidth must be positive, got {}",
                self.linewidth
            )));
        }
        if self.spectrum_points < 2 {
            return Err(NvError::InvalidParameter("spectrum_points must be >= 2".into()));
        }
        if self.jobs == Some(0) {
            return Err(NvError::InvalidParameter("jobs must be >= 1".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text)
            .map_err(|e| NvError::Malformed(format!("config parse error: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| NvError::Malformed(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Resolve the config: explicit path, then $NVKIN_CONFIG, then defaults.
    pub fn resolve(explicit: Option<&Path>) -> Result<Self> {
        if let Some(p) = explicit {
            return Self::from_file(p);
        }
        if let Ok(p) = std::env::var(CONFIG_ENV_VAR) {
            if !p.is_empty() {
                return Self::from_file(Path::new(&p));
            }
        }
        Ok(Self::default())
    }
}
