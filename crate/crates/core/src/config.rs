//! Simulation parameters.
//!
//! Every tunable lives in [`SimConfig`]. Power quantities are stored in dBm
//! as they appear in configuration files and converted to watts through
//! [`dbm_to_watts`] at the point of use.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Converts a dBm power level to watts. `-inf` maps to exactly 0 W.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Small-scale fading model applied to every power gain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Fading {
    /// Exponentially distributed power gain with the given mean.
    Rayleigh { mean: f64 },
    /// Gamma distributed power gain with shape `m` and unit mean.
    Nakagami { m: f64 },
}

impl Default for Fading {
    fn default() -> Self {
        Fading::Rayleigh { mean: 1.0 }
    }
}

/// Power used by the two legs of the orthogonal (serial) comparator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OmaPower {
    /// Each leg keeps its share of the power split, `alpha * P_s`.
    #[default]
    Split,
    /// Each leg is sent at the full transmit power `P_s`.
    Full,
}

/// Clock update rule applied in every consensus iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateRule {
    /// Current incoming weights only.
    Baseline,
    /// Current incoming weights blended with remembered outgoing weights.
    #[default]
    Proposed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    /// Number of small base stations, K.
    pub num_nodes: usize,
    /// Number of sub-bands, N.
    pub num_subbands: usize,
    pub tx_power_dbm: f64,
    /// Interference threshold P0 for neighbour detection.
    pub power_threshold_dbm: f64,
    pub path_loss_exp: f64,
    /// Consensus step size epsilon.
    pub step_size: f64,
    /// Target timing standard deviation, seconds.
    pub sd_tolerance: f64,
    /// Iteration budget per snapshot, n_max.
    pub max_iters: usize,
    /// Number of synchronization snapshots, T_max.
    pub max_snapshots: usize,
    /// Swap-matching iteration budget, N_max.
    pub swap_max_iters: usize,
    /// Step of the strong-RX power coefficient grid over [0, 1].
    pub power_grid_step: f64,
    pub system_bandwidth_hz: f64,
    pub noise_density_dbm_hz: f64,
    /// Message size L sent by every TX to each of its RXs.
    pub payload_bits: f64,
    pub fading: Fading,
    pub near_radius_m: f64,
    pub far_radius_m: f64,
    /// Initial clock offsets are uniform in `[0, init_offset_max]` seconds.
    pub init_offset_max: f64,
    /// Node temperatures are uniform over this range, degrees Celsius.
    pub temp_range_c: [f64; 2],
    /// Quadratic oscillator drift coefficient beta, ppm per degree squared.
    pub temp_coeff_ppm_c2: f64,
    /// Wall time of one consensus iteration, seconds.
    pub iter_period: f64,
    pub oma_power: OmaPower,
    pub update_rule: UpdateRule,
    pub rng_seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            num_nodes: 60,
            num_subbands: 5,
            tx_power_dbm: 23.0,
            power_threshold_dbm: -110.0,
            path_loss_exp: 4.0,
            step_size: 0.9,
            sd_tolerance: 1e-6,
            max_iters: 5_000,
            max_snapshots: 500,
            swap_max_iters: 100,
            power_grid_step: 0.0025,
            system_bandwidth_hz: 10e6,
            noise_density_dbm_hz: -174.0,
            payload_bits: 64_000.0,
            fading: Fading::default(),
            near_radius_m: 10.0,
            far_radius_m: 100.0,
            init_offset_max: 40e-6,
            temp_range_c: [0.0, 50.0],
            temp_coeff_ppm_c2: -0.042,
            iter_period: 1e-3,
            oma_power: OmaPower::default(),
            update_rule: UpdateRule::default(),
            rng_seed: 1,
        }
    }
}

impl SimConfig {
    /// Full-scale parameter set: 250 nodes, 1000 snapshots, 20 000 iterations.
    pub fn full_scale() -> Self {
        SimConfig {
            num_nodes: 250,
            max_iters: 20_000,
            max_snapshots: 1000,
            ..SimConfig::default()
        }
    }

    pub fn tx_power_w(&self) -> f64 {
        dbm_to_watts(self.tx_power_dbm)
    }

    pub fn power_threshold_w(&self) -> f64 {
        dbm_to_watts(self.power_threshold_dbm)
    }

    pub fn subband_bandwidth_hz(&self) -> f64 {
        self.system_bandwidth_hz / self.num_subbands as f64
    }

    /// Number of points on the inclusive grid `{0, step, ..., 1}`.
    pub fn power_grid_len(&self) -> usize {
        (1.0 / self.power_grid_step).round() as usize + 1
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.num_nodes < 2 {
            return bad(format!("num_nodes must be >= 2, got {}", self.num_nodes));
        }
        if self.num_subbands < 1 {
            return bad("num_subbands must be >= 1".into());
        }
        if !(self.step_size > 0.0 && self.step_size < 1.0) {
            return bad(format!("step_size must lie in (0, 1), got {}", self.step_size));
        }
        if !(self.sd_tolerance > 0.0) {
            return bad(format!("sd_tolerance must be > 0, got {}", self.sd_tolerance));
        }
        if self.max_iters == 0 {
            return Err(Error::NoIterationBudget);
        }
        if self.max_snapshots == 0 || self.swap_max_iters == 0 {
            return bad("max_snapshots and swap_max_iters must be positive".into());
        }
        let step = self.power_grid_step;
        if !(step > 0.0 && step <= 1.0) {
            return bad(format!("power_grid_step must lie in (0, 1], got {step}"));
        }
        let cells = (1.0 / step).round();
        if (cells * step - 1.0).abs() > 1e-9 {
            return bad(format!("power_grid_step {step} does not divide 1 evenly"));
        }
        if !(self.near_radius_m > 0.0 && self.near_radius_m < self.far_radius_m) {
            return bad(format!(
                "need 0 < near_radius_m < far_radius_m, got {} and {}",
                self.near_radius_m, self.far_radius_m
            ));
        }
        if !(self.path_loss_exp > 0.0) {
            return bad("path_loss_exp must be positive".into());
        }
        if !(self.system_bandwidth_hz > 0.0 && self.payload_bits > 0.0) {
            return bad("system_bandwidth_hz and payload_bits must be positive".into());
        }
        if !(self.init_offset_max >= 0.0 && self.iter_period > 0.0) {
            return bad("init_offset_max must be >= 0 and iter_period > 0".into());
        }
        if self.temp_range_c[0] > self.temp_range_c[1] {
            return bad("temp_range_c must be [low, high]".into());
        }
        if self.tx_power_dbm.is_nan() || self.power_threshold_dbm.is_nan() {
            return bad("power levels must not be NaN".into());
        }
        crate::channel::GainSampler::new(self.fading)?;
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> std::result::Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    /// Reads and validates a configuration file.
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })?;
        let config = Self::from_toml_str(&text).map_err(|source| Error::Toml {
            path: path.to_owned(),
            source,
        })?;
        config.validate()?;
        Ok(config)
    }
}
