//! Scenario files: the on-disk description of one simulation campaign.
//!
//! TOML with a fixed schema; unknown keys are rejected so typos fail loudly.
//! Two scenarios ship inside the binary and can be addressed by name.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::ChannelConfig;
use crate::detector::DetectionConfig;
use crate::error::{Error, Result};
use crate::mitigation::MitigationConfig;
use crate::signal::{CodeSequence, DynamicsParams, SignalParams};
use crate::spoofer::SpoofProfile;

/// Scenarios compiled into the binary, addressable by bare name.
pub const BUNDLED_SCENARIOS: &[(&str, &str)] = &[
    (
        "nominal_harsh",
        include_str!("../scenarios/nominal_harsh.toml"),
    ),
    (
        "liftoff_spoof",
        include_str!("../scenarios/liftoff_spoof.toml"),
    ),
];

pub const TABLE_NAMES: &[&str] = &["correlators", "detections", "range", "verdicts"];

/// Signal description as written in a scenario file. The actual code chips
/// are derived from the seed; each epoch re-keys the sequence so snapshots
/// never repeat.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalConfig {
    pub code_seed: u64,
    #[serde(default = "default_chip_rate")]
    pub chip_rate: f64,
    /// Coherent snapshot length T_I, s. Also the code period unless
    /// `code_length` says otherwise.
    pub recs_length_s: f64,
    /// Chips per code period; defaults to one period per snapshot.
    #[serde(default)]
    pub code_length: Option<usize>,
    #[serde(default)]
    pub carrier_offset_hz: f64,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    #[serde(default = "default_f_carrier")]
    pub f_carrier_hz: f64,
}

fn default_chip_rate() -> f64 {
    5.115e6
}
fn default_amplitude() -> f64 {
    1.0
}
fn default_f_carrier() -> f64 {
    crate::signal::DEFAULT_F_CARRIER_HZ
}

impl SignalConfig {
    pub fn code_length(&self) -> usize {
        self.code_length
            .unwrap_or_else(|| (self.recs_length_s * self.chip_rate).round() as usize)
    }

    /// Materialize the signal for one epoch, re-keying the code sequence.
    pub fn signal_for_epoch(&self, epoch: u64) -> Result<SignalParams> {
        let seed = self
            .code_seed
            .wrapping_mul(0x9e37_79b9_7f4a_7c15)
            .wrapping_add(epoch);
        Ok(SignalParams {
            carrier_offset_hz: self.carrier_offset_hz,
            code: CodeSequence::pseudorandom(seed, self.code_length(), self.chip_rate)?,
            recs_length_s: self.recs_length_s,
            amplitude: self.amplitude,
            f_carrier_hz: self.f_carrier_hz,
        })
    }

    /// A code guaranteed absent from the signal, for noise-floor probing.
    pub fn bogus_signal_for_epoch(&self, epoch: u64) -> Result<SignalParams> {
        let seed = self
            .code_seed
            .wrapping_mul(0x9e37_79b9_7f4a_7c15)
            .wrapping_add(epoch)
            ^ 0xb065_0000_0000_0000;
        Ok(SignalParams {
            carrier_offset_hz: self.carrier_offset_hz,
            code: CodeSequence::pseudorandom(seed, self.code_length(), self.chip_rate)?,
            recs_length_s: self.recs_length_s,
            amplitude: self.amplitude,
            f_carrier_hz: self.f_carrier_hz,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.recs_length_s > 0.0) {
            return Err(Error::config("signal.recs_length_s", "must be > 0"));
        }
        if !(self.chip_rate > 0.0) {
            return Err(Error::config("signal.chip_rate", "must be > 0"));
        }
        if !(self.amplitude > 0.0) {
            return Err(Error::config("signal.amplitude", "must be > 0"));
        }
        if !(self.f_carrier_hz > 0.0) {
            return Err(Error::config("signal.f_carrier_hz", "must be > 0"));
        }
        if self.code_length() == 0 {
            return Err(Error::config("signal.code_length", "must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: u64,
    /// Campaign length, s.
    pub duration: f64,
    /// Measurement cadence, s.
    #[serde(default = "default_epoch_interval")]
    pub epoch_interval: f64,
    pub signal: SignalConfig,
    pub dynamics: DynamicsParams,
    pub channel: ChannelConfig,
    #[serde(default)]
    pub spoof: Option<SpoofProfile>,
    pub detection: DetectionConfig,
    #[serde(default)]
    pub mitigation: MitigationConfig,
    /// Which result tables to emit; the summary is always written.
    #[serde(default = "default_outputs")]
    pub outputs: Vec<String>,
    /// Fraction of non-authentic epochs tolerated before the run is
    /// considered an authentication failure (exit code 3).
    #[serde(default = "default_auth_budget")]
    pub auth_failure_budget: f64,
}

fn default_epoch_interval() -> f64 {
    1.0
}
fn default_outputs() -> Vec<String> {
    TABLE_NAMES.iter().map(|s| s.to_string()).collect()
}
fn default_auth_budget() -> f64 {
    1.0
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epoch_interval > 0.0) {
            return Err(Error::config("epoch_interval", "must be > 0"));
        }
        if !(self.duration >= self.epoch_interval) {
            return Err(Error::config(
                "duration",
                "must be positive and at least one epoch_interval",
            ));
        }
        if !(0.0..=1.0).contains(&self.auth_failure_budget) {
            return Err(Error::config("auth_failure_budget", "must be in [0, 1]"));
        }
        for name in &self.outputs {
            if !TABLE_NAMES.contains(&name.as_str()) {
                return Err(Error::config(
                    "outputs",
                    format!("unknown table {name:?}; known: {TABLE_NAMES:?}"),
                ));
            }
        }
        self.signal.validate()?;
        self.dynamics.validate()?;
        self.channel.validate()?;
        if let Some(spoof) = &self.spoof {
            spoof.validate()?;
        }
        self.detection.validate()?;
        self.mitigation.validate()?;
        // The correlator grid must be resolvable on the sample grid.
        let quant = crate::SPEED_OF_LIGHT / self.channel.fs;
        if self.detection.spacing < quant {
            return Err(Error::config(
                "detection.spacing",
                format!(
                    "spacing {} m is below the sample quantization {quant:.2} m at fs = {}",
                    self.detection.spacing, self.channel.fs
                ),
            ));
        }
        Ok(())
    }

    pub fn n_epochs(&self) -> usize {
        (self.duration / self.epoch_interval).round().max(1.0) as usize
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig =
            toml::from_str(text).map_err(|e| Error::Parse(format!("scenario: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Load a scenario from a file path, or by bundled name when no such file
/// exists.
pub fn load_scenario(name_or_path: &str) -> Result<ScenarioConfig> {
    let path = Path::new(name_or_path);
    if path.exists() {
        let text = std::fs::read_to_string(path)?;
        return ScenarioConfig::from_toml(&text);
    }
    if let Some((_, text)) = BUNDLED_SCENARIOS
        .iter()
        .find(|(name, _)| *name == name_or_path)
    {
        return ScenarioConfig::from_toml(text);
    }
    Err(Error::InvalidInput(format!(
        "no scenario file {name_or_path:?} and no bundled scenario of that name \
         (bundled: {:?})",
        BUNDLED_SCENARIOS.iter().map(|(n, _)| *n).collect::<Vec<_>>()
    )))
}
