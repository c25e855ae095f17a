//! Benchmark configuration: one JSON file with a section per subsystem.

use std::path::Path;

use tedhr_core::alloc::VehicleParams;
use tedhr_core::fc::FcConfig;
use tedhr_core::hc::HcGains;
use tedhr_core::scenario::ScenarioConfig;
use tedhr_core::sensing::SensorConfig;
use tedhr_core::wind::WindConfig;

use crate::HarnessError;

#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct SimSettings {
    /// Truth-model integration step, s.
    pub dt_sim: f64,
    /// Controller tick period, s.
    pub dt_ctrl: f64,
    /// Position-error norm declaring a run diverged, m.
    pub divergence_threshold_m: f64,
}

impl Default for SimSettings {
    fn default() -> Self {
        Self { dt_sim: 1e-3, dt_ctrl: 0.01, divergence_threshold_m: 5.0 }
    }
}

#[derive(Clone, Debug, Default, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub vehicle: VehicleParams,
    pub gains_fc: FcConfig,
    pub gains_hc: HcGains,
    pub sensor: SensorConfig,
    pub wind: WindConfig,
    pub scenario: ScenarioConfig,
    pub sim: SimSettings,
}

impl SimConfig {
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
        let cfg: SimConfig = serde_json::from_str(&text)
            .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        self.vehicle.validate()?;
        self.gains_hc.validate()?;
        self.sensor.validate()?;
        self.wind.validate()?;
        self.scenario.validate()?;
        let s = &self.sim;
        if !(s.dt_sim > 0.0 && s.dt_sim <= 0.01) {
            return Err(HarnessError::Config(format!("dt_sim = {} outside (0, 0.01]", s.dt_sim)));
        }
        if !(s.dt_ctrl > 0.0) || s.dt_ctrl < s.dt_sim {
            return Err(HarnessError::Config("dt_ctrl must be >= dt_sim".into()));
        }
        let ratio = s.dt_ctrl / s.dt_sim;
        if (ratio - ratio.round()).abs() > 1e-9 {
            return Err(HarnessError::Config("dt_ctrl must be a multiple of dt_sim".into()));
        }
        if !(s.divergence_threshold_m > 0.0) {
            return Err(HarnessError::Config("divergence threshold must be positive".into()));
        }
        Ok(())
    }
}
