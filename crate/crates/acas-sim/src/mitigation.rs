//! Authentication verdicts: composition of detection results and monitors
//! into three escalating mitigation levels.
//!
//! Level 1 verifies encrypted-band presence and cross-band range
//! consistency. Level 2 adds C/N0, total-power and clock-drift monitoring
//! plus a handover-seeded vestigial search. Level 3 swaps the vestigial
//! search for the exhaustive one, countering open-band nulling. Data-message
//! authentication, inter-snapshot bridging and multi-channel RAIM are
//! reserved as permanently disabled slots so their absence is visible in
//! every verdict.

use serde::{Deserialize, Serialize};

use crate::channel::{ClockParams, ClockState};
use crate::correlator::NoiseFloor;
use crate::detector::vss::VssResult;
use crate::detector::DetectionReport;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MitigationConfig {
    #[serde(default = "default_level")]
    pub level: u8,
    /// Acceptance band for the cross-band range offset, m.
    #[serde(default = "default_range_check")]
    pub range_check_threshold: f64,
    /// Trailing window for the C/N0 and power monitors, epochs.
    #[serde(default = "default_cn0_window")]
    pub cn0_window: usize,
    /// C/N0 jump that raises an alarm, dB.
    #[serde(default = "default_cn0_alarm")]
    pub cn0_alarm_db: f64,
    /// Drift-step alarm threshold, s/s. Zero selects a 3-sigma band from
    /// the clock model parameters.
    #[serde(default)]
    pub clock_drift_alarm: f64,
    /// Campaign-wide false alarm probability spread over the search plans.
    #[serde(default = "default_overall_pfa")]
    pub overall_pfa: f64,
    /// Run level-3 exhaustive searches even past the time-uncertainty
    /// resource guard.
    #[serde(default)]
    pub override_resource_guard: bool,
}

fn default_level() -> u8 {
    1
}
fn default_range_check() -> f64 {
    30.0
}
fn default_cn0_window() -> usize {
    10
}
fn default_cn0_alarm() -> f64 {
    3.0
}
fn default_overall_pfa() -> f64 {
    1e-3
}

impl Default for MitigationConfig {
    fn default() -> Self {
        MitigationConfig {
            level: default_level(),
            range_check_threshold: default_range_check(),
            cn0_window: default_cn0_window(),
            cn0_alarm_db: default_cn0_alarm(),
            clock_drift_alarm: 0.0,
            overall_pfa: default_overall_pfa(),
            override_resource_guard: false,
        }
    }
}

impl MitigationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.level) {
            return Err(Error::config("mitigation.level", "must be 1, 2 or 3"));
        }
        if !(self.range_check_threshold > 0.0) {
            return Err(Error::config("mitigation.range_check_threshold", "must be > 0"));
        }
        if self.cn0_window == 0 {
            return Err(Error::config("mitigation.cn0_window", "must be >= 1"));
        }
        if !(self.cn0_alarm_db > 0.0) {
            return Err(Error::config("mitigation.cn0_alarm_db", "must be > 0"));
        }
        if !(self.overall_pfa > 0.0 && self.overall_pfa < 1.0) {
            return Err(Error::config("mitigation.overall_pfa", "must be in (0, 1)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alarm {
    E6Absent,
    RangeMismatch,
    Cn0Anomaly,
    PowerAnomaly,
    VssSpoof,
    ClockDrift,
    Flank,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub pass: bool,
    pub statistic: f64,
    pub threshold: f64,
    /// Disabled checks are reserved slots; they never affect the verdict.
    pub enabled: bool,
    pub note: &'static str,
}

impl CheckResult {
    fn enabled(name: &'static str, pass: bool, statistic: f64, threshold: f64) -> Self {
        CheckResult {
            name,
            pass,
            statistic,
            threshold,
            enabled: true,
            note: "",
        }
    }

    fn reserved(name: &'static str) -> Self {
        CheckResult {
            name,
            pass: true,
            statistic: f64::NAN,
            threshold: f64::NAN,
            enabled: false,
            note: "not implemented",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AuthVerdict {
    pub epoch: f64,
    /// Conjunction of all enabled checks.
    pub authentic: bool,
    pub checks: Vec<CheckResult>,
    pub alarms: Vec<Alarm>,
}

fn finish(epoch: f64, checks: Vec<CheckResult>, alarms: Vec<Alarm>) -> AuthVerdict {
    AuthVerdict {
        epoch,
        authentic: checks.iter().all(|c| !c.enabled || c.pass),
        checks,
        alarms,
    }
}

/// Level-1 authentication: encrypted-band power at the predicted offset and
/// cross-band range consistency.
///
/// A coordinated delay applied consistently to both bands passes this level
/// by construction; exposing that requires the vestigial searches of the
/// higher levels.
pub fn level1_check(
    report: &DetectionReport,
    nf: &NoiseFloor,
    cfg: &MitigationConfig,
) -> AuthVerdict {
    let _ = nf; // threshold already folded into the report
    let mut checks = Vec::new();
    let mut alarms = Vec::new();

    let power_ok = report.detected;
    checks.push(CheckResult::enabled(
        "e6_power",
        power_ok,
        report.peak_magnitude,
        report.threshold,
    ));
    if !power_ok {
        alarms.push(Alarm::E6Absent);
    }

    let (range_ok, range_stat) = match report.range_offset {
        Some(r) => (r.abs() <= cfg.range_check_threshold, r),
        None => (false, f64::INFINITY),
    };
    checks.push(CheckResult::enabled(
        "range_consistency",
        range_ok,
        range_stat,
        cfg.range_check_threshold,
    ));
    if report.detected && !range_ok {
        alarms.push(Alarm::RangeMismatch);
    }
    if report.flags.flank_trigger {
        alarms.push(Alarm::Flank);
    }

    finish(report.epoch, checks, alarms)
}

/// Windowed C/N0 jump monitor: the mean of the last `cn0_window` epochs
/// against the mean of everything before it.
pub fn cn0_monitor(history_dbhz: &[f64], cfg: &MitigationConfig) -> Result<Option<Alarm>> {
    let w = cfg.cn0_window;
    if history_dbhz.len() <= w {
        return Err(Error::InvalidInput(format!(
            "C/N0 monitor needs more than {w} epochs of history, have {}",
            history_dbhz.len()
        )));
    }
    let (baseline, recent) = history_dbhz.split_at(history_dbhz.len() - w);
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    if (mean(recent) - mean(baseline)).abs() > cfg.cn0_alarm_db {
        Ok(Some(Alarm::Cn0Anomaly))
    } else {
        Ok(None)
    }
}

/// Total pre-correlation power monitor (gain-control proxy): alarms when the
/// recent window deviates from the trailing baseline by more than a factor
/// corresponding to the configured dB alarm.
pub fn power_monitor(power_history: &[f64], cfg: &MitigationConfig) -> Result<Option<Alarm>> {
    let w = cfg.cn0_window;
    if power_history.len() <= w {
        return Err(Error::InvalidInput(format!(
            "power monitor needs more than {w} epochs of history, have {}",
            power_history.len()
        )));
    }
    let (baseline, recent) = power_history.split_at(power_history.len() - w);
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    let b = mean(baseline);
    if b <= 0.0 {
        return Ok(None);
    }
    let ratio_db = 10.0 * (mean(recent) / b).log10();
    if ratio_db.abs() > cfg.cn0_alarm_db {
        Ok(Some(Alarm::PowerAnomaly))
    } else {
        Ok(None)
    }
}

/// Clock-drift step monitor over the most recent state transition, against
/// a 3-sigma band from the model's drift process noise (or the configured
/// absolute threshold when nonzero).
pub fn clock_drift_monitor(
    states: &[ClockState],
    params: &ClockParams,
    cfg: &MitigationConfig,
) -> Result<Option<Alarm>> {
    if states.len() < 2 {
        return Err(Error::InvalidInput(
            "clock drift monitor needs at least two states".into(),
        ));
    }
    let prev = &states[states.len() - 2];
    let last = &states[states.len() - 1];
    let dt = last.epoch - prev.epoch;
    if !(dt > 0.0) {
        return Err(Error::InvalidInput("clock states must advance in time".into()));
    }
    let threshold = if cfg.clock_drift_alarm > 0.0 {
        cfg.clock_drift_alarm
    } else {
        3.0 * (params.q_drift() * dt).sqrt()
    };
    if (last.drift - prev.drift).abs() > threshold {
        Ok(Some(Alarm::ClockDrift))
    } else {
        Ok(None)
    }
}

/// Everything one epoch can feed into the verdict. Histories include the
/// current epoch as their last element; `vss` is required for levels >= 2
/// (handover-seeded at level 2, exhaustive at level 3 — the caller picks
/// the search, the verdict only consumes its result).
pub struct EpochInputs<'a> {
    pub report: &'a DetectionReport,
    pub nf: &'a NoiseFloor,
    pub cn0_history: &'a [f64],
    pub power_history: &'a [f64],
    pub clock_states: &'a [ClockState],
    pub clock_params: &'a ClockParams,
    pub vss: Option<&'a VssResult>,
}

/// Produce the verdict for the configured mitigation level.
pub fn run_level(cfg: &MitigationConfig, inputs: &EpochInputs) -> Result<AuthVerdict> {
    cfg.validate()?;
    let mut verdict = level1_check(inputs.report, inputs.nf, cfg);
    if cfg.level >= 2 {
        let vss = inputs.vss.ok_or_else(|| {
            Error::InvalidInput(format!(
                "level {} requires a vestigial search result",
                cfg.level
            ))
        })?;

        // Monitors tolerate short warm-up histories: no baseline, no check.
        match cn0_monitor(inputs.cn0_history, cfg) {
            Ok(alarm) => {
                verdict.checks.push(CheckResult::enabled(
                    "cn0_monitor",
                    alarm.is_none(),
                    *inputs.cn0_history.last().unwrap_or(&f64::NAN),
                    cfg.cn0_alarm_db,
                ));
                if let Some(a) = alarm {
                    verdict.alarms.push(a);
                }
            }
            Err(_) => verdict.checks.push(CheckResult {
                name: "cn0_monitor",
                pass: true,
                statistic: f64::NAN,
                threshold: cfg.cn0_alarm_db,
                enabled: false,
                note: "warming up",
            }),
        }
        match power_monitor(inputs.power_history, cfg) {
            Ok(alarm) => {
                verdict.checks.push(CheckResult::enabled(
                    "power_monitor",
                    alarm.is_none(),
                    *inputs.power_history.last().unwrap_or(&f64::NAN),
                    cfg.cn0_alarm_db,
                ));
                if let Some(a) = alarm {
                    verdict.alarms.push(a);
                }
            }
            Err(_) => verdict.checks.push(CheckResult {
                name: "power_monitor",
                pass: true,
                statistic: f64::NAN,
                threshold: cfg.cn0_alarm_db,
                enabled: false,
                note: "warming up",
            }),
        }

        let clock_alarm = if inputs.clock_states.len() >= 2 {
            clock_drift_monitor(inputs.clock_states, inputs.clock_params, cfg)?
        } else {
            None
        };
        verdict.checks.push(CheckResult::enabled(
            "clock_drift",
            clock_alarm.is_none(),
            inputs
                .clock_states
                .last()
                .map(|s| s.drift)
                .unwrap_or(f64::NAN),
            cfg.clock_drift_alarm,
        ));
        if let Some(a) = clock_alarm {
            verdict.alarms.push(a);
        }

        // Open-band peaks with no encrypted counterpart are inauthentic
        // transmissions in their own right.
        verdict.checks.push(CheckResult::enabled(
            "vestigial_search",
            !vss.spoof_declared && vss.unverified_e1.is_empty(),
            vss.detections.len() as f64,
            2.0,
        ));
        if vss.spoof_declared {
            verdict.alarms.push(Alarm::VssSpoof);
        }
    }

    verdict.checks.push(CheckResult::reserved("nav_message_auth"));
    verdict.checks.push(CheckResult::reserved("snapshot_bridging"));
    verdict.checks.push(CheckResult::reserved("raim"));

    verdict.authentic = verdict.checks.iter().all(|c| !c.enabled || c.pass);
    Ok(verdict)
}
