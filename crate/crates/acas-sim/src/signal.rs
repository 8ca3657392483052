//! Continuous-time complex baseband signal synthesis.
//!
//! The modulator is a function of continuous time: any sample rate sees the
//! same underlying waveform. Line-of-sight dynamics drive both the code delay
//! and the carrier phase from the same range function, so code and carrier
//! Doppler stay consistent.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::SPEED_OF_LIGHT;

/// Line-of-sight range model: s(t) = s0 + v t + a t²/2 + A sin(ω t).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsParams {
    /// Initial range, m.
    pub s0: f64,
    /// Range rate, m/s.
    pub v: f64,
    /// Range acceleration, m/s².
    pub a: f64,
    /// Sinusoid amplitude, m.
    pub sin_amp: f64,
    /// Sinusoid angular rate, rad/s.
    pub sin_rate: f64,
}

impl DynamicsParams {
    pub fn validate(&self) -> Result<()> {
        let all = [self.s0, self.v, self.a, self.sin_amp, self.sin_rate];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(Error::config("dynamics", "all fields must be finite"));
        }
        if self.sin_amp < 0.0 {
            return Err(Error::config("dynamics.sin_amp", "must be >= 0"));
        }
        if self.sin_rate < 0.0 {
            return Err(Error::config("dynamics.sin_rate", "must be >= 0"));
        }
        Ok(())
    }

    /// Range at time `t`, m.
    pub fn range(&self, t: f64) -> f64 {
        self.s0 + self.v * t + 0.5 * self.a * t * t + self.sin_amp * (self.sin_rate * t).sin()
    }

    /// Range rate at time `t`, m/s.
    pub fn rate(&self, t: f64) -> f64 {
        self.v + self.a * t + self.sin_amp * self.sin_rate * (self.sin_rate * t).cos()
    }

    /// Range acceleration at time `t`, m/s².
    pub fn accel(&self, t: f64) -> f64 {
        self.a - self.sin_amp * self.sin_rate * self.sin_rate * (self.sin_rate * t).sin()
    }
}

/// A ±1 spreading code with a fixed chip rate. Lookups wrap modulo the code
/// length, so a short code behaves as a periodic ranging code.
#[derive(Debug, Clone)]
pub struct CodeSequence {
    chips: Vec<i8>,
    chip_rate: f64,
}

impl CodeSequence {
    pub fn new(chips: Vec<i8>, chip_rate: f64) -> Result<Self> {
        if chips.is_empty() {
            return Err(Error::config("code.chips", "length must be >= 1"));
        }
        if chips.iter().any(|&c| c != 1 && c != -1) {
            return Err(Error::config("code.chips", "every chip must be +1 or -1"));
        }
        if !(chip_rate > 0.0) {
            return Err(Error::config("code.chip_rate", "must be > 0"));
        }
        Ok(CodeSequence { chips, chip_rate })
    }

    /// Seeded pseudorandom ±1 chip stream. Stands in for an encrypted code:
    /// only the statistical properties matter here.
    pub fn pseudorandom(seed: u64, length: usize, chip_rate: f64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let chips = (0..length)
            .map(|_| if rng.gen::<bool>() { 1i8 } else { -1i8 })
            .collect();
        CodeSequence::new(chips, chip_rate)
    }

    pub fn len(&self) -> usize {
        self.chips.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chips.is_empty()
    }

    pub fn chip_rate(&self) -> f64 {
        self.chip_rate
    }

    /// Chip length expressed in meters of propagation.
    pub fn chip_length_m(&self) -> f64 {
        SPEED_OF_LIGHT / self.chip_rate
    }

    /// Code period in seconds (length / chip rate).
    pub fn period_s(&self) -> f64 {
        self.chips.len() as f64 / self.chip_rate
    }

    /// Chip value at time `t`: chips[floor(t · chip_rate) mod length].
    pub fn value_at(&self, t: f64) -> f64 {
        let idx = (t * self.chip_rate).floor() as i64;
        let len = self.chips.len() as i64;
        self.chips[idx.rem_euclid(len) as usize] as f64
    }
}

/// Baseband signal description: residual carrier, spreading code, coherent
/// snapshot length and amplitude.
#[derive(Debug, Clone)]
pub struct SignalParams {
    /// Residual baseband carrier offset, Hz.
    pub carrier_offset_hz: f64,
    pub code: CodeSequence,
    /// Coherent snapshot duration T_I, s.
    pub recs_length_s: f64,
    /// Linear amplitude (unit default).
    pub amplitude: f64,
    /// Carrier frequency used to convert range to carrier phase, Hz.
    pub f_carrier_hz: f64,
}

/// Default carrier for Doppler-to-phase conversion: the E6 band center.
pub const DEFAULT_F_CARRIER_HZ: f64 = 1_278.75e6;

impl SignalParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.recs_length_s > 0.0) {
            return Err(Error::config("signal.recs_length", "must be > 0"));
        }
        if !(self.f_carrier_hz > 0.0) {
            return Err(Error::config("signal.f_carrier", "must be > 0"));
        }
        Ok(())
    }
}

/// Evaluate the modulated baseband signal at arbitrary instants.
///
/// `range_m(t)` supplies the line-of-sight range driving both the code delay
/// and the carrier phase; `gain(t)` supplies the instantaneous amplitude.
pub fn synthesize_at<R, G>(
    sig: &SignalParams,
    range_m: R,
    gain: G,
    phase_offset: f64,
    times: impl Iterator<Item = f64>,
) -> Result<Vec<Complex64>>
where
    R: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    let two_pi = std::f64::consts::TAU;
    let mut out = Vec::new();
    for t in times {
        let s = range_m(t);
        if !s.is_finite() {
            return Err(Error::InvalidInput(format!(
                "range model returned non-finite value at t = {t}"
            )));
        }
        let tau = s / SPEED_OF_LIGHT;
        let chip = sig.code.value_at(t - tau);
        let phase = two_pi * sig.carrier_offset_hz * t - two_pi * sig.f_carrier_hz * tau
            + phase_offset;
        out.push(Complex64::from_polar(gain(t) * chip, phase));
    }
    Ok(out)
}

/// Generate `n` samples starting at `t_start` with sample rate `fs`.
pub fn generate_samples(
    sig: &SignalParams,
    dynamics: &DynamicsParams,
    t_start: f64,
    fs: f64,
    n: usize,
) -> Result<Vec<Complex64>> {
    if n == 0 {
        return Err(Error::InvalidInput("sample count must be >= 1".into()));
    }
    if !(fs > 2.0 * sig.carrier_offset_hz.abs()) {
        return Err(Error::InvalidInput(format!(
            "fs = {fs} must exceed twice the carrier offset"
        )));
    }
    synthesize_at(
        sig,
        |t| dynamics.range(t),
        |_| sig.amplitude,
        0.0,
        (0..n).map(|k| t_start + k as f64 / fs),
    )
}
