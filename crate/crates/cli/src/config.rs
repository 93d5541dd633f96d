//! Configuration file handling.
//!
//! One TOML file with `[socket]`, `[sensor]`, `[controller]`,
//! `[oscillation]`, and `[campaign]` sections; every field has a
//! default, so a config file only needs the values it overrides. The
//! path comes from `--config`, else the `PLUGSIM_CONFIG` environment
//! variable, else built-in defaults.

use std::path::Path;

use anyhow::Context;
use serde::{Deserialize, Serialize};

use plugsim_core::analysis::DeltaStats;
use plugsim_core::control::{controller_init, ControllerGains, GainConvention};
use plugsim_core::{OscillationParams, SensorModel, SocketModel};

/// Environment variable consulted for the config path when `--config`
/// is not given.
pub const CONFIG_ENV_VAR: &str = "PLUGSIM_CONFIG";

/// Controller tuning: the response statistics the gains derive from,
/// the termination thresholds, and the carrier/feed parameters.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerConfig {
    pub gain_convention: GainConvention,
    /// Axial feed during plug-in (and plug-out, reversed), mm/s.
    pub v_const: f64,
    /// Axial force budget when wedged, N.
    pub push_force: f64,
    /// Measured response time the settle time is matched to, s.
    pub t_response: f64,
    /// Rocking ranges the gains derive from, degrees.
    pub delta_theta_x: f64,
    pub delta_theta_y: f64,
    /// Force swings the gains derive from, N.
    pub delta_f_x: f64,
    pub delta_f_y: f64,
    /// Plug-in termination threshold, N (negative). The default is the
    /// extreme rather than the mean of the measured plug-in forces:
    /// sliding sits near -80 N and a wedged push reaches -push_force,
    /// so only the seating detent spike crosses the threshold.
    pub f_z_plugin: f64,
    /// Plug-out anomaly threshold, N (positive); the extreme of the
    /// measured plug-out forces, above the steady extraction level.
    pub f_z_plugout: f64,
    /// Carrier yield rate under wall contact, 1/s.
    pub carrier_yield_rate: f64,
    /// Push-driven chamfer alignment rate while wedged, deg/s.
    pub chamfer_align_rate: f64,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            gain_convention: GainConvention::Eq3,
            v_const: 10.0,
            push_force: 100.0,
            t_response: 0.26,
            delta_theta_x: 9.5,
            delta_theta_y: 6.8,
            delta_f_x: 27.7,
            delta_f_y: 32.6,
            f_z_plugin: -103.7,
            f_z_plugout: 90.1,
            carrier_yield_rate: 3.0,
            chamfer_align_rate: 3.0,
        }
    }
}

impl ControllerConfig {
    /// Response statistics in the shape `controller_init` consumes.
    pub fn stats(&self) -> DeltaStats {
        DeltaStats {
            delta_theta_x: self.delta_theta_x,
            delta_theta_y: self.delta_theta_y,
            delta_f_x: self.delta_f_x,
            delta_f_y: self.delta_f_y,
            f_z_plugin: self.f_z_plugin,
            f_z_plugout: self.f_z_plugout,
            t_response_mean: self.t_response,
            t_response_max: self.t_response,
            degenerate: false,
        }
    }

    pub fn gains(&self) -> anyhow::Result<ControllerGains> {
        controller_init(&self.stats(), self.gain_convention, self.v_const)
            .map_err(|e| anyhow::anyhow!("controller config: {e}"))
    }
}

/// Campaign-level settings.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignSettings {
    /// Trials per strategy arm.
    pub trials: usize,
    pub base_seed: u64,
    /// Upper bound on the sampled initial misalignment, degrees.
    pub max_error: f64,
    /// Per-phase timeout, s.
    pub timeout: f64,
    /// Control period, s (matches the 100 Hz sensor by default).
    pub dt_control: f64,
}

impl Default for CampaignSettings {
    fn default() -> Self {
        Self {
            trials: 200,
            base_seed: 42,
            max_error: 10.0,
            timeout: 30.0,
            dt_control: 0.01,
        }
    }
}

/// The full configuration tree.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub socket: SocketModel,
    pub sensor: SensorModel,
    pub controller: ControllerConfig,
    pub oscillation: OscillationParams,
    pub campaign: CampaignSettings,
}

impl Config {
    /// Loads a config: explicit path, else `PLUGSIM_CONFIG`, else
    /// built-in defaults.
    pub fn load(path: Option<&Path>) -> anyhow::Result<Config> {
        let from_env = std::env::var_os(CONFIG_ENV_VAR);
        let path = match (path, &from_env) {
            (Some(p), _) => Some(p.to_path_buf()),
            (None, Some(p)) => Some(std::path::PathBuf::from(p)),
            (None, None) => None,
        };
        let config = match path {
            Some(p) => {
                let text = std::fs::read_to_string(&p)
                    .with_context(|| format!("reading config {}", p.display()))?;
                toml::from_str(&text)
                    .with_context(|| format!("parsing config {}", p.display()))?
            }
            None => Config::default(),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn from_toml(text: &str) -> anyhow::Result<Config> {
        let config: Config = toml::from_str(text).context("parsing config")?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        self.socket
            .validate()
            .map_err(|e| anyhow::anyhow!("socket config: {e}"))?;
        self.sensor
            .validate()
            .map_err(|e| anyhow::anyhow!("sensor config: {e}"))?;
        self.oscillation
            .validate()
            .map_err(|e| anyhow::anyhow!("oscillation config: {e}"))?;
        let gains = self.gains()?;
        gains
            .validate()
            .map_err(|e| anyhow::anyhow!("controller config: {e}"))?;
        if self.controller.push_force <= 0.0 {
            anyhow::bail!("controller config: push_force must be positive");
        }
        if self.controller.carrier_yield_rate < 0.0 || self.controller.chamfer_align_rate < 0.0 {
            anyhow::bail!("controller config: carrier rates must be non-negative");
        }
        let c = &self.campaign;
        if c.trials == 0 {
            anyhow::bail!("campaign config: trials must be at least 1");
        }
        if c.max_error <= 0.0 || c.timeout <= 0.0 || c.dt_control <= 0.0 {
            anyhow::bail!("campaign config: max_error, timeout, dt_control must be positive");
        }
        Ok(())
    }

    pub fn gains(&self) -> anyhow::Result<ControllerGains> {
        self.controller.gains()
    }
}
