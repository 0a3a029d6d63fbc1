//! TOML run configuration.
//!
//! ```toml
//! [dgp]
//! n_households = 5000
//! seed = 7
//!
//! [calibration]
//! eta_bars = [0.8, 0.9]
//!
//! [tolerances]
//! golden_pp = 0.05
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use timealloc_core::calibration::{CalibrationInputs, DEFAULT_ETA_BARS, DEFAULT_PSIS, PUBLISHED_TOL_PP};
use timealloc_core::synthpanel::{CategoryEffects, DgpConfig};

use crate::args::DgpOverrides;
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub dgp: DgpConfig,
    pub calibration: CalibrationConfig,
    pub tolerances: Tolerances,
}

/// Calibration inputs and grid axes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrationConfig {
    pub beta_z: f64,
    pub beta_l: f64,
    pub bgpt_l: f64,
    pub bgpt_z: f64,
    pub ratio_r: f64,
    pub eta_bars: Vec<f64>,
    pub psis: Vec<f64>,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        let p = CalibrationInputs::published();
        Self {
            beta_z: p.beta_z,
            beta_l: p.beta_l,
            bgpt_l: p.bgpt_l,
            bgpt_z: p.bgpt_z,
            ratio_r: p.ratio_r,
            eta_bars: DEFAULT_ETA_BARS.to_vec(),
            psis: DEFAULT_PSIS.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Allowed deviation from the published calibration grid, in percentage points.
    pub golden_pp: f64,
    /// Recovery report: estimates within this many standard errors pass.
    pub recovery_se: f64,
    /// Recovery report: window contrast within this many percentage points passes.
    pub window_pp: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            golden_pp: PUBLISHED_TOL_PP,
            recovery_se: 2.0,
            window_pp: 1.0,
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let cfg: RunConfig =
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let t = cfg.tolerances;
        for (name, v) in [
            ("tolerances.golden_pp", t.golden_pp),
            ("tolerances.recovery_se", t.recovery_se),
            ("tolerances.window_pp", t.window_pp),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CliError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(cfg)
    }
}

/// Generator settings from the config file with command-line overrides applied.
pub fn dgp_with_overrides(base: &DgpConfig, o: &DgpOverrides) -> CliResult<DgpConfig> {
    let mut cfg = base.clone();
    if let Some(v) = o.seed {
        cfg.seed = v;
    }
    if let Some(v) = o.n_households {
        cfg.n_households = v;
    }
    if let Some(v) = o.n_quarters {
        cfg.n_quarters = v;
    }
    if let Some(v) = o.exposure_strength {
        cfg.exposure_strength = v;
    }
    if let Some(v) = o.confound_strength {
        cfg.confound_strength = v;
    }
    if let Some(v) = o.rain_elasticity {
        cfg.rain_elasticity = v;
    }
    if o.placebo {
        cfg.true_effects = CategoryEffects::zero();
    }
    cfg.validate()?;
    Ok(cfg)
}
