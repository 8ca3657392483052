//! Coherent correlation of sample batches against code replicas.
//!
//! The replica is produced by the same modulator as the signal generator, so
//! correlator and generator cannot drift apart. Sub-sample code offsets are
//! realized by nearest-sample selection of the replica stream; the
//! quantization error c/(2 fs) is folded into the range-check budget.
//!
//! Correctness is defined by the direct sum; the FFT path must match it to
//! 1e-6 relative.

use num_complex::Complex64;
use rand::Rng;
use rustfft::FftPlanner;

use crate::channel::SampleBatch;
use crate::error::{Error, Result};
use crate::signal::{synthesize_at, SignalParams};
use crate::SPEED_OF_LIGHT;

/// Magnitudes/phases of N equidistant correlators with their code-phase
/// anchor relative to the predicted offset.
#[derive(Debug, Clone)]
pub struct CorrelatorVector {
    pub values: Vec<Complex64>,
    /// Distance between adjacent elements, m.
    pub spacing_m: f64,
    /// Code phase of element 0 relative to the predicted offset, m.
    pub anchor_offset_m: f64,
    /// Coherent integration time used, s.
    pub t_i: f64,
    /// Frequency offset of the evaluated bin, Hz.
    pub freq_offset_hz: f64,
}

impl CorrelatorVector {
    pub fn magnitudes(&self) -> Vec<f64> {
        self.values.iter().map(|c| c.norm()).collect()
    }

    /// Code offset of element `i` relative to the predicted offset, m.
    pub fn offset_of(&self, i: usize) -> f64 {
        self.anchor_offset_m + i as f64 * self.spacing_m
    }
}

/// Mean signal-absent correlation power (estimate of 2 sigma²_corr).
#[derive(Debug, Clone, Copy)]
pub struct NoiseFloor {
    pub power: f64,
    /// Number of hypotheses averaged.
    pub dof_count: usize,
}

/// Noiseless replica stream spanning a batch plus a shift margin on both
/// sides, generated from the predicted range function.
#[derive(Debug, Clone)]
pub struct Replica {
    samples: Vec<Complex64>,
    margin: usize,
    fs: f64,
}

impl Replica {
    /// Generate a replica for a batch of `n` samples starting at receiver
    /// time `t_start`, with `margin` extra samples on each side.
    pub fn generate(
        sig: &SignalParams,
        predicted_range_m: impl Fn(f64) -> f64,
        t_start: f64,
        fs: f64,
        n: usize,
        margin: usize,
    ) -> Result<Replica> {
        let total = n + 2 * margin;
        let samples = synthesize_at(
            sig,
            &predicted_range_m,
            |_| 1.0,
            0.0,
            (0..total).map(|k| t_start + (k as i64 - margin as i64) as f64 / fs),
        )?;
        Ok(Replica {
            samples,
            margin,
            fs,
        })
    }

    /// Replica value at batch-relative index `idx` (may be negative within
    /// the margin).
    pub fn sample(&self, idx: i64) -> Complex64 {
        let i = idx + self.margin as i64;
        debug_assert!(i >= 0 && (i as usize) < self.samples.len(), "replica margin exceeded");
        self.samples[i as usize]
    }

    pub fn margin(&self) -> usize {
        self.margin
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    /// Nearest-sample shift corresponding to a code offset in meters.
    pub fn shift_for(&self, offset_m: f64) -> i64 {
        (offset_m / SPEED_OF_LIGHT * self.fs).round() as i64
    }

    /// Contiguous slice of `len` samples starting at batch-relative `idx`.
    pub fn slice(&self, idx: i64, len: usize) -> &[Complex64] {
        let i = (idx + self.margin as i64) as usize;
        &self.samples[i..i + len]
    }
}

/// Coherent integration over a grid of code offsets and frequency bins.
///
/// Entry (k, m) is the raw direct sum over the first t_i·fs samples of
/// batch[n] · conj(replica(offset_k, freq_m))[n].
pub fn correlate_grid(
    batch: &SampleBatch,
    replica: &Replica,
    offsets_m: &[f64],
    freqs_hz: &[f64],
    t_i: f64,
) -> Result<Vec<Vec<Complex64>>> {
    if offsets_m.is_empty() || freqs_hz.is_empty() {
        return Err(Error::InvalidInput("empty offset or frequency grid".into()));
    }
    let m_samples = (t_i * batch.fs).round() as usize;
    if m_samples == 0 || m_samples > batch.len() {
        return Err(Error::BatchTooShort {
            needed: m_samples,
            have: batch.len(),
        });
    }
    let mut out = vec![vec![Complex64::default(); freqs_hz.len()]; offsets_m.len()];
    for (k, &offset) in offsets_m.iter().enumerate() {
        let shift = replica.shift_for(offset);
        let rep = replica.slice(-shift, m_samples);
        for (m, &freq) in freqs_hz.iter().enumerate() {
            let mut acc = Complex64::default();
            if freq == 0.0 {
                for (b, r) in batch.samples[..m_samples].iter().zip(rep) {
                    acc += b * r.conj();
                }
            } else {
                let step = Complex64::from_polar(1.0, -std::f64::consts::TAU * freq / batch.fs);
                let mut rot = Complex64::new(1.0, 0.0);
                for (b, r) in batch.samples[..m_samples].iter().zip(rep) {
                    acc += b * r.conj() * rot;
                    rot *= step;
                }
            }
            out[k][m] = acc;
        }
    }
    Ok(out)
}

/// Single-lag direct correlation: sum over batch[lag + n] · conj(replica[n]).
pub fn lag_correlation(batch: &[Complex64], replica: &[Complex64], lag: usize) -> Complex64 {
    let mut acc = Complex64::default();
    for (b, r) in batch[lag..lag + replica.len()].iter().zip(replica) {
        acc += b * r.conj();
    }
    acc
}

/// All-lag cross-correlation via zero-padded FFT.
///
/// Returns r[d] = sum_n batch[d + n] · conj(replica[n]) for
/// d in 0..=batch.len() - replica.len(). Matches `lag_correlation` within
/// 1e-6 relative.
pub fn xcorr_fft(batch: &[Complex64], replica: &[Complex64]) -> Vec<Complex64> {
    assert!(replica.len() <= batch.len());
    let n_lags = batch.len() - replica.len() + 1;
    let size = (batch.len() + replica.len()).next_power_of_two();
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(size);
    let ifft = planner.plan_fft_inverse(size);
    let mut x: Vec<Complex64> = batch.to_vec();
    x.resize(size, Complex64::default());
    let mut r: Vec<Complex64> = replica.to_vec();
    r.resize(size, Complex64::default());
    fft.process(&mut x);
    fft.process(&mut r);
    for (xi, ri) in x.iter_mut().zip(r.iter()) {
        *xi *= ri.conj();
    }
    ifft.process(&mut x);
    let scale = 1.0 / size as f64;
    x.truncate(n_lags);
    for v in &mut x {
        *v *= scale;
    }
    x
}

/// Estimate the post-correlation noise power from `k` random hypotheses
/// using a code not present in the signal.
pub fn noise_floor(
    batch: &SampleBatch,
    bogus_replica: &Replica,
    t_i: f64,
    k: usize,
    rng: &mut impl Rng,
) -> Result<NoiseFloor> {
    if k < 8 {
        return Err(Error::InvalidInput(format!(
            "noise floor needs k >= 8 hypotheses, got {k}"
        )));
    }
    let m_samples = (t_i * batch.fs).round() as usize;
    if m_samples > batch.len() {
        return Err(Error::BatchTooShort {
            needed: m_samples,
            have: batch.len(),
        });
    }
    let margin = bogus_replica.margin() as i64;
    let mut acc = 0.0;
    for _ in 0..k {
        let shift = rng.gen_range(-margin..=margin);
        let rep = bogus_replica.slice(-shift, m_samples);
        let c = lag_correlation(&batch.samples, rep, 0);
        acc += c.norm_sqr();
    }
    Ok(NoiseFloor {
        power: acc / k as f64,
        dof_count: k,
    })
}
