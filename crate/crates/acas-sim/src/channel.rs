//! Receiver measurement and sampling chain emulation.
//!
//! Error models: two-state receiver clock (Allan parameters h0, h-2),
//! differential ionosphere (data-driven or synthetic heavy-tailed),
//! statistical sample-level multipath, Gaussian measurement noise on the E1
//! observables, and AWGN on the snapshot samples from the configured C/N0.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Exp, Normal, StudentT, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{synthesize_at, DynamicsParams, SignalParams};
use crate::spoofer::SpoofProfile;
use crate::SPEED_OF_LIGHT;

/// Allan-variance parameters of the two-state clock model.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClockParams {
    /// White frequency noise parameter, s.
    pub h0: f64,
    /// Random-walk frequency noise parameter, 1/s.
    pub h_minus2: f64,
}

impl ClockParams {
    pub fn validate(&self) -> Result<()> {
        if self.h0 < 0.0 {
            return Err(Error::config("clock.h0", "must be >= 0"));
        }
        if self.h_minus2 < 0.0 {
            return Err(Error::config("clock.h_minus2", "must be >= 0"));
        }
        Ok(())
    }

    /// Spectral density driving the bias state: q_b = h0/2.
    pub fn q_bias(&self) -> f64 {
        self.h0 / 2.0
    }

    /// Spectral density driving the drift state: q_d = 2 π² h_{-2}.
    pub fn q_drift(&self) -> f64 {
        2.0 * std::f64::consts::PI.powi(2) * self.h_minus2
    }

    /// Analytic Allan deviation of the two-state model at averaging time τ.
    pub fn allan_deviation(&self, tau: f64) -> f64 {
        (self.h0 / (2.0 * tau) + 2.0 * std::f64::consts::PI.powi(2) * self.h_minus2 * tau / 3.0)
            .sqrt()
    }
}

/// Clock state realization: bias and drift at a given epoch.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ClockState {
    /// Clock bias, s.
    pub bias: f64,
    /// Clock drift, s/s.
    pub drift: f64,
    /// Epoch the state refers to, s.
    pub epoch: f64,
}

impl ClockState {
    pub fn zero() -> Self {
        ClockState {
            bias: 0.0,
            drift: 0.0,
            epoch: 0.0,
        }
    }

    /// Bias extrapolated to receiver time `t` with the current drift.
    pub fn bias_at(&self, t: f64) -> f64 {
        self.bias + self.drift * (t - self.epoch)
    }
}

/// Propagate the two-state clock over `dt` with process noise from the
/// standard covariance integration of (q_b, q_d), cross-terms included.
pub fn clock_step(state: &ClockState, dt: f64, p: &ClockParams, rng: &mut impl Rng) -> ClockState {
    assert!(dt > 0.0, "clock_step requires dt > 0");
    let qb = p.q_bias();
    let qd = p.q_drift();
    let var_b = qb * dt + qd * dt.powi(3) / 3.0;
    let cov_bd = qd * dt * dt / 2.0;
    let var_d = qd * dt;
    // Cholesky factor of the 2x2 covariance.
    let l11 = var_b.sqrt();
    let (l21, l22) = if l11 > 0.0 {
        let l21 = cov_bd / l11;
        (l21, (var_d - l21 * l21).max(0.0).sqrt())
    } else {
        (0.0, var_d.sqrt())
    };
    let n1: f64 = rng.sample(rand_distr::StandardNormal);
    let n2: f64 = rng.sample(rand_distr::StandardNormal);
    ClockState {
        bias: state.bias + state.drift * dt + l11 * n1,
        drift: state.drift + l21 * n1 + l22 * n2,
        epoch: state.epoch + dt,
    }
}

/// Differential E1/E6 ionosphere error model.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum IonoConfig {
    /// Heavy-tailed synthetic model: scaled Student-t, truncated.
    Synthetic {
        #[serde(default = "default_iono_dof")]
        dof: f64,
        #[serde(default = "default_iono_scale")]
        scale_m: f64,
        #[serde(default = "default_iono_truncate")]
        truncate_m: f64,
    },
    /// Resampling from an ingested table of differential delays, m.
    Table { values: Vec<f64> },
}

fn default_iono_dof() -> f64 {
    3.0
}
fn default_iono_scale() -> f64 {
    3.0
}
fn default_iono_truncate() -> f64 {
    60.0
}

impl Default for IonoConfig {
    fn default() -> Self {
        IonoConfig::Synthetic {
            dof: default_iono_dof(),
            scale_m: default_iono_scale(),
            truncate_m: default_iono_truncate(),
        }
    }
}

impl IonoConfig {
    /// Load the data-driven mode from a one-column text table: one value in
    /// meters per line, `#` comments permitted.
    pub fn from_table_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut values = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let v: f64 = line.parse().map_err(|_| {
                Error::Parse(format!("iono table line {}: not a number: {line:?}", lineno + 1))
            })?;
            values.push(v);
        }
        if values.is_empty() {
            return Err(Error::config("iono.table", "table file contains no values"));
        }
        Ok(IonoConfig::Table { values })
    }
}

/// Draw one differential ionospheric range error, m.
pub fn sample_iono_error(cfg: &IonoConfig, rng: &mut impl Rng) -> Result<f64> {
    match cfg {
        IonoConfig::Synthetic {
            dof,
            scale_m,
            truncate_m,
        } => {
            if *scale_m == 0.0 {
                return Ok(0.0);
            }
            let t = StudentT::new(*dof)
                .map_err(|e| Error::config("iono.dof", e.to_string()))?;
            for _ in 0..1000 {
                let x = t.sample(rng) * scale_m;
                if x.abs() <= *truncate_m {
                    return Ok(x);
                }
            }
            Ok(truncate_m.copysign(t.sample(rng)))
        }
        IonoConfig::Table { values } => {
            if values.is_empty() {
                return Err(Error::config("iono.table", "empty table"));
            }
            Ok(values[rng.gen_range(0..values.len())])
        }
    }
}

/// Statistical multipath stand-in: delayed, attenuated, phase-rotated echoes
/// of the direct path, with amplitude scaled by elevation.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultipathConfig {
    #[serde(default = "default_num_echoes")]
    pub num_echoes: usize,
    /// Mean of the exponential echo path-delay distribution, m.
    #[serde(default = "default_mean_delay")]
    pub mean_delay_m: f64,
    /// Rayleigh-mean echo amplitude at zero delay (relative to direct path).
    #[serde(default = "default_mean_amplitude")]
    pub mean_amplitude: f64,
    /// Elevation band, deg. The echo amplitude scales linearly from 1.0 at
    /// 5 deg down to 0.4 at 30 deg.
    #[serde(default = "default_elev_min")]
    pub elev_min_deg: f64,
    #[serde(default = "default_elev_max")]
    pub elev_max_deg: f64,
    /// Differential E1 multipath entering the E1 pseudorange, m (1 sigma).
    #[serde(default = "default_e1_diff_sigma")]
    pub e1_diff_sigma_m: f64,
}

fn default_num_echoes() -> usize {
    2
}
fn default_mean_delay() -> f64 {
    20.0
}
fn default_mean_amplitude() -> f64 {
    0.25
}
fn default_elev_min() -> f64 {
    5.0
}
fn default_elev_max() -> f64 {
    30.0
}
fn default_e1_diff_sigma() -> f64 {
    3.0
}

impl Default for MultipathConfig {
    fn default() -> Self {
        MultipathConfig {
            num_echoes: default_num_echoes(),
            mean_delay_m: default_mean_delay(),
            mean_amplitude: default_mean_amplitude(),
            elev_min_deg: default_elev_min(),
            elev_max_deg: default_elev_max(),
            e1_diff_sigma_m: default_e1_diff_sigma(),
        }
    }
}

fn elevation_amplitude_scale(elev_deg: f64) -> f64 {
    // 1.0 at 5 deg, 0.4 at 30 deg, clamped outside the band.
    let t = ((elev_deg - 5.0) / 25.0).clamp(0.0, 1.0);
    1.0 + t * (0.4 - 1.0)
}

/// Timestamped complex baseband snapshot with sampling metadata.
#[derive(Debug, Clone)]
pub struct SampleBatch {
    /// Receiver time of the first sample, s.
    pub t_start: f64,
    /// Sample rate, Hz.
    pub fs: f64,
    pub samples: Vec<Complex64>,
    /// Sample-count association to the E1 front-end (shared clock counter).
    pub e1_sample_anchor: u64,
}

impl SampleBatch {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Add echoes to the batch. Echo delays are strictly positive: multipath
/// never creates correlation energy earlier than the direct path.
pub fn apply_multipath(
    batch: &SampleBatch,
    cfg: &MultipathConfig,
    rng: &mut (impl Rng + ?Sized),
) -> SampleBatch {
    if cfg.num_echoes == 0 {
        return batch.clone();
    }
    let mut out = batch.clone();
    let elev = if cfg.elev_max_deg > cfg.elev_min_deg {
        Uniform::new(cfg.elev_min_deg, cfg.elev_max_deg).sample(rng)
    } else {
        cfg.elev_min_deg
    };
    let elev_scale = elevation_amplitude_scale(elev);
    let delay_dist = Exp::new(1.0 / cfg.mean_delay_m).expect("mean_delay_m > 0");
    for _ in 0..cfg.num_echoes {
        let delay_m: f64 = delay_dist.sample(rng);
        let shift = ((delay_m / SPEED_OF_LIGHT * batch.fs).round() as i64).max(1) as usize;
        // Rayleigh with the configured mean, power decaying with delay.
        let sigma = cfg.mean_amplitude / (std::f64::consts::PI / 2.0).sqrt();
        let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
        let rayleigh = sigma * (-2.0 * u.ln()).sqrt();
        let amp = rayleigh * (-delay_m / (2.0 * cfg.mean_delay_m)).exp() * elev_scale;
        let phase: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let rot = Complex64::from_polar(amp, phase);
        for n in shift..batch.samples.len() {
            out.samples[n] += rot * batch.samples[n - shift];
        }
    }
    out
}

/// Add circular complex AWGN with per-sample variance fs / cn0_linear, so a
/// coherent integration over T_I yields post-correlation SNR cn0_linear·T_I.
/// `cn0_dbhz = None` means noiseless.
pub fn add_awgn(
    batch: &SampleBatch,
    cn0_dbhz: Option<f64>,
    rng: &mut (impl Rng + ?Sized),
) -> SampleBatch {
    let cn0 = match cn0_dbhz {
        None => return batch.clone(),
        Some(v) => v,
    };
    let cn0_linear = 10f64.powf(cn0 / 10.0);
    let sigma_component = (batch.fs / cn0_linear / 2.0).sqrt();
    let normal = Normal::new(0.0, sigma_component).expect("valid sigma");
    let mut out = batch.clone();
    for s in &mut out.samples {
        *s += Complex64::new(normal.sample(rng), normal.sample(rng));
    }
    out
}

/// One epoch of E1 tracking observables.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct E1Measurement {
    /// Receiver time of the measurement, s.
    pub epoch: f64,
    /// Pseudorange, m.
    pub pseudorange: f64,
    /// Carrier phase, cycles.
    pub carrier_phase: f64,
    /// Doppler, Hz.
    pub doppler: f64,
    /// Doppler rate, Hz/s.
    pub doppler_rate: f64,
    /// Estimated carrier-to-noise density, dB-Hz.
    pub cn0: f64,
}

/// Full channel configuration for one simulated link.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    /// C/N0 on the snapshot samples, dB-Hz. `None` = noiseless.
    pub cn0_dbhz: Option<f64>,
    /// Snapshot sample rate, Hz.
    pub fs: f64,
    #[serde(default)]
    pub iono: IonoConfig,
    #[serde(default)]
    pub multipath: MultipathConfig,
    pub clock: ClockParams,
    /// E1 pseudorange thermal noise, m (1 sigma).
    #[serde(default = "default_e1_pr_sigma")]
    pub e1_pr_sigma_m: f64,
    /// Residual inter-front-end hardware bias, m.
    #[serde(default = "default_hw_offset")]
    pub hw_offset_m: f64,
    /// Broadcast group delay, m.
    #[serde(default = "default_bgd")]
    pub bgd_m: f64,
    /// E1 carrier frequency for Doppler scaling, Hz.
    #[serde(default = "default_e1_carrier")]
    pub e1_f_carrier_hz: f64,
}

fn default_e1_pr_sigma() -> f64 {
    0.75
}
fn default_hw_offset() -> f64 {
    3.0
}
fn default_bgd() -> f64 {
    5.0
}
fn default_e1_carrier() -> f64 {
    1_575.42e6
}

impl ChannelConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.fs > 0.0) {
            return Err(Error::config("channel.fs", "must be > 0"));
        }
        if self.e1_pr_sigma_m < 0.0 {
            return Err(Error::config("channel.e1_pr_sigma_m", "must be >= 0"));
        }
        if let Some(cn0) = self.cn0_dbhz {
            if !(cn0 > 0.0) {
                return Err(Error::config("channel.cn0_dbhz", "must be > 0"));
            }
        }
        self.clock.validate()?;
        Ok(())
    }
}

/// Generate one E1 observable epoch from the true dynamics and clock state.
pub fn make_e1_measurement(
    t_rx: f64,
    dynamics: &DynamicsParams,
    clock: &ClockState,
    cfg: &ChannelConfig,
    rng: &mut impl Rng,
) -> E1Measurement {
    let bias = clock.bias_at(t_rx);
    let t_true = t_rx - bias;
    let range = dynamics.range(t_true);
    let rate = dynamics.rate(t_true);
    let accel = dynamics.accel(t_true);
    let code_noise = if cfg.e1_pr_sigma_m > 0.0 {
        Normal::new(0.0, cfg.e1_pr_sigma_m).unwrap().sample(rng)
    } else {
        0.0
    };
    let mp_diff = if cfg.multipath.e1_diff_sigma_m > 0.0 {
        Normal::new(0.0, cfg.multipath.e1_diff_sigma_m)
            .unwrap()
            .sample(rng)
    } else {
        0.0
    };
    let wavelength = SPEED_OF_LIGHT / cfg.e1_f_carrier_hz;
    let phase_noise = Normal::new(0.0, 0.01).unwrap().sample(rng);
    let cn0 = cfg.cn0_dbhz.unwrap_or(45.0) + Normal::new(0.0, 0.2).unwrap().sample(rng);
    E1Measurement {
        epoch: t_rx,
        pseudorange: range + SPEED_OF_LIGHT * bias + code_noise + mp_diff,
        carrier_phase: -(range + SPEED_OF_LIGHT * bias) / wavelength + phase_noise,
        doppler: -cfg.e1_f_carrier_hz * (rate / SPEED_OF_LIGHT + clock.drift),
        doppler_rate: -cfg.e1_f_carrier_hz * accel / SPEED_OF_LIGHT,
        cn0,
    }
}

/// Everything needed to synthesize one snapshot batch.
pub struct CaptureSpec<'a> {
    pub sig: &'a SignalParams,
    pub dynamics: &'a DynamicsParams,
    /// Constant extra path delay applied to this band, m (BGD + HW + iono).
    pub extra_delay_m: f64,
    pub clock: ClockState,
    pub spoof: Option<&'a SpoofProfile>,
    /// Receiver time of the first sample, s.
    pub t_rx_start: f64,
    pub duration_s: f64,
}

/// Independent random streams for the stochastic capture stages.
pub struct CaptureRngs<'r> {
    pub multipath: &'r mut dyn rand::RngCore,
    pub awgn: &'r mut dyn rand::RngCore,
    pub spoofer: &'r mut dyn rand::RngCore,
}

/// Compose modulator, multipath, spoofer injection and AWGN into a snapshot.
pub fn capture_batch(
    spec: &CaptureSpec,
    cfg: &ChannelConfig,
    rngs: &mut CaptureRngs,
) -> Result<SampleBatch> {
    if spec.duration_s < spec.sig.recs_length_s {
        return Err(Error::InvalidInput(format!(
            "capture duration {} s shorter than the coherent snapshot length {} s",
            spec.duration_s, spec.sig.recs_length_s
        )));
    }
    let fs = cfg.fs;
    let n = (spec.duration_s * fs).round() as usize;
    let extra = spec.extra_delay_m;
    let dynamics = spec.dynamics;
    // Sampling and downconversion are referenced to the receiver clock, so
    // both the code delay and the carrier phase follow the pseudorange:
    // geometric range at the true emission epoch plus the clock bias. The
    // bias term in the carrier is the local-oscillator contribution; without
    // it the batch would not show the f·drift Doppler that the open-band
    // measurement reports.
    let clock = spec.clock;
    let pseudorange = move |t: f64| {
        let bias = clock.bias_at(t);
        dynamics.range(t - bias) + SPEED_OF_LIGHT * bias + extra
    };
    let samples = synthesize_at(
        spec.sig,
        pseudorange,
        |_| spec.sig.amplitude,
        0.0,
        (0..n).map(|k| spec.t_rx_start + k as f64 / fs),
    )?;
    let mut batch = SampleBatch {
        t_start: spec.t_rx_start,
        fs,
        samples,
        e1_sample_anchor: (spec.t_rx_start * fs).round().max(0.0) as u64,
    };
    batch = apply_multipath(&batch, &cfg.multipath, rngs.multipath);
    if let Some(profile) = spec.spoof {
        crate::spoofer::inject_spoofer(
            &mut batch,
            spec.sig,
            |t| dynamics.range(t) + extra,
            &spec.clock,
            profile,
            rngs.spoofer,
        )?;
    }
    Ok(add_awgn(&batch, cfg.cn0_dbhz, rngs.awgn))
}
