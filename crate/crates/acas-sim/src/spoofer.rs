//! Inauthentic replica injection.
//!
//! The spoofer adds a delayed, scaled, phase-offset copy of the authentic
//! modulated waveform to the snapshot. The true-signal samples are never
//! modified (no nulling), and delay profiles are non-negative by
//! construction: the replica can never precede the true signal.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{ClockState, SampleBatch};
use crate::error::{Error, Result};
use crate::signal::{CodeSequence, SignalParams};
use crate::SPEED_OF_LIGHT;

/// Built-in spoofing profiles, declared by name in the scenario config.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "snake_case")]
pub enum SpoofKind {
    /// Constant extra delay and amplitude from `start` onward.
    ConstantOffset {
        delay_m: f64,
        amplitude: f64,
        #[serde(default)]
        start: f64,
    },
    /// Zero-delay meaconing followed by signal lift-off: the replica
    /// approaches from an initial standoff, reaches zero delay at the
    /// capture instant while staying weak, then raises power and pulls away.
    Liftoff {
        #[serde(default = "default_liftoff_start")]
        start: f64,
        #[serde(default = "default_liftoff_capture")]
        capture: f64,
        #[serde(default = "default_standoff")]
        standoff_m: f64,
        #[serde(default = "default_pulloff_rate")]
        pulloff_rate_mps: f64,
        /// Optional soft cap on the pull-off delay; past it the delay keeps
        /// growing at a slow creep so the profile stays strictly increasing.
        #[serde(default)]
        pulloff_cap_m: Option<f64>,
        #[serde(default = "default_approach_amplitude")]
        approach_amplitude: f64,
        #[serde(default = "default_final_amplitude")]
        final_amplitude: f64,
        #[serde(default = "default_power_ramp")]
        power_ramp_s: f64,
    },
    /// Replica modulated with a code not present in the true signal.
    WrongCode {
        delay_m: f64,
        amplitude: f64,
        code_seed: u64,
        #[serde(default)]
        start: f64,
    },
}

fn default_liftoff_start() -> f64 {
    500.0
}
fn default_liftoff_capture() -> f64 {
    600.0
}
fn default_standoff() -> f64 {
    300.0
}
fn default_pulloff_rate() -> f64 {
    2.0
}
fn default_approach_amplitude() -> f64 {
    0.5
}
fn default_final_amplitude() -> f64 {
    2.0
}
fn default_power_ramp() -> f64 {
    60.0
}

const PULLOFF_CREEP_MPS: f64 = 0.01;

/// A programmable attack: delay/power profiles plus dual-band behavior.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpoofProfile {
    #[serde(flatten)]
    pub kind: SpoofKind,
    /// Carrier phase offset of the replica, rad.
    #[serde(default)]
    pub phase_offset: f64,
    /// Bias the E1 observables toward the spoofer's delay (coordinated
    /// dual-band attack on the tracked measurements).
    #[serde(default)]
    pub affects_e1: bool,
    /// Transmit an aligned replica on E1 as well, so it is visible to the
    /// E1 vestigial scan even when the tracked measurement is unaffected.
    #[serde(default)]
    pub e1_presence: bool,
}

impl SpoofProfile {
    pub fn validate(&self) -> Result<()> {
        let (delay0, amp) = match &self.kind {
            SpoofKind::ConstantOffset { delay_m, amplitude, .. }
            | SpoofKind::WrongCode { delay_m, amplitude, .. } => (*delay_m, *amplitude),
            SpoofKind::Liftoff {
                standoff_m,
                pulloff_rate_mps,
                approach_amplitude,
                final_amplitude,
                start,
                capture,
                ..
            } => {
                if capture <= start {
                    return Err(Error::config("spoof.capture", "must be after spoof.start"));
                }
                if *pulloff_rate_mps < 0.0 {
                    return Err(Error::config("spoof.pulloff_rate_mps", "must be >= 0"));
                }
                (*standoff_m, approach_amplitude.min(*final_amplitude))
            }
        };
        if delay0 < 0.0 {
            return Err(Error::config(
                "spoof.delay",
                "delay profile must be non-negative: the replica cannot precede the true signal",
            ));
        }
        if amp < 0.0 {
            return Err(Error::config("spoof.amplitude", "must be >= 0"));
        }
        Ok(())
    }

    /// Extra path delay of the replica at time `t`, m.
    pub fn offset_m(&self, t: f64) -> f64 {
        match &self.kind {
            SpoofKind::ConstantOffset { delay_m, .. } => *delay_m,
            SpoofKind::WrongCode { delay_m, .. } => *delay_m,
            SpoofKind::Liftoff {
                start,
                capture,
                standoff_m,
                pulloff_rate_mps,
                pulloff_cap_m,
                ..
            } => {
                if t < *start {
                    *standoff_m
                } else if t < *capture {
                    // Half-sine approach reaching zero delay at capture.
                    let frac = (t - start) / (capture - start);
                    standoff_m * (1.0 - (std::f64::consts::FRAC_PI_2 * frac).sin())
                } else {
                    let ramp = pulloff_rate_mps * (t - capture);
                    match pulloff_cap_m {
                        Some(cap) if ramp > *cap => {
                            let t_cap = capture + cap / pulloff_rate_mps;
                            cap + PULLOFF_CREEP_MPS * (t - t_cap)
                        }
                        _ => ramp,
                    }
                }
            }
        }
    }

    /// Replica amplitude at time `t` as a linear ratio to the true signal.
    pub fn amplitude(&self, t: f64) -> f64 {
        match &self.kind {
            SpoofKind::ConstantOffset { amplitude, start, .. }
            | SpoofKind::WrongCode { amplitude, start, .. } => {
                if t < *start {
                    0.0
                } else {
                    *amplitude
                }
            }
            SpoofKind::Liftoff {
                start,
                capture,
                approach_amplitude,
                final_amplitude,
                power_ramp_s,
                ..
            } => {
                if t < *start {
                    0.0
                } else if t < *capture {
                    *approach_amplitude
                } else {
                    let frac = ((t - capture) / power_ramp_s).clamp(0.0, 1.0);
                    approach_amplitude + frac * (final_amplitude - approach_amplitude)
                }
            }
        }
    }

    /// True when the spoofer emits no power over [t0, t1].
    pub fn is_quiet(&self, t0: f64, t1: f64) -> bool {
        self.amplitude(t0) == 0.0 && self.amplitude(t1) == 0.0 && {
            match &self.kind {
                SpoofKind::ConstantOffset { start, .. } | SpoofKind::WrongCode { start, .. } => {
                    t1 < *start
                }
                SpoofKind::Liftoff { start, .. } => t1 < *start,
            }
        }
    }
}

/// Add the replica to the batch. The replica carries the authentic code
/// (meaconing) unless the wrong-code option is selected; its delay and
/// amplitude follow the profile evaluated at receiver time.
pub fn inject_spoofer(
    batch: &mut SampleBatch,
    sig: &SignalParams,
    base_range_m: impl Fn(f64) -> f64,
    clock: &ClockState,
    profile: &SpoofProfile,
    _rng: &mut dyn rand::RngCore,
) -> Result<()> {
    profile.validate()?;
    let t_end = batch.t_start + batch.len() as f64 / batch.fs;
    if profile.is_quiet(batch.t_start, t_end) {
        return Ok(());
    }
    let wrong_code: Option<CodeSequence> = match &profile.kind {
        SpoofKind::WrongCode { code_seed, .. } => Some(CodeSequence::pseudorandom(
            *code_seed,
            sig.code.len(),
            sig.code.chip_rate(),
        )?),
        _ => None,
    };
    let code = wrong_code.as_ref().unwrap_or(&sig.code);
    let two_pi = std::f64::consts::TAU;
    for (k, out) in batch.samples.iter_mut().enumerate() {
        let t_rx = batch.t_start + k as f64 / batch.fs;
        let bias = clock.bias_at(t_rx);
        let gain = sig.amplitude * profile.amplitude(t_rx);
        if gain == 0.0 {
            continue;
        }
        // Same receiver clock as the authentic capture: code delay and
        // carrier phase follow the spoofed pseudorange including the
        // local-oscillator bias term.
        let s = base_range_m(t_rx - bias)
            + crate::SPEED_OF_LIGHT * bias
            + profile.offset_m(t_rx);
        if !s.is_finite() {
            return Err(Error::InvalidInput(format!(
                "spoofer range non-finite at t = {t_rx}"
            )));
        }
        let tau = s / crate::SPEED_OF_LIGHT;
        let chip = code.value_at(t_rx - tau);
        let phase = two_pi * sig.carrier_offset_hz * t_rx - two_pi * sig.f_carrier_hz * tau
            + profile.phase_offset;
        *out += num_complex::Complex64::from_polar(gain * chip, phase);
    }
    Ok(())
}

/// Bias an E1 measurement toward the spoofer (coordinated dual-band attack).
pub fn bias_e1_measurement(
    m: &mut crate::channel::E1Measurement,
    profile: &SpoofProfile,
    _rng: &mut impl Rng,
) {
    if profile.affects_e1 && profile.amplitude(m.epoch) > 0.0 {
        m.pseudorange += profile.offset_m(m.epoch);
    }
}
