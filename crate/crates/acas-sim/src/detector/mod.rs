//! User-side detection algorithms: cross-band handover prediction, maximum
//! and early signal detection, and s-curve range estimation.
//!
//! The early detector prefers the earliest admissible peak because a
//! delay-only attacker can add path delay but not remove it: the authentic
//! signal is always the earliest one.

pub mod theory;
pub mod vss;

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelConfig, E1Measurement};
use crate::correlator::CorrelatorVector;
use crate::error::{Error, Result};
use crate::SPEED_OF_LIGHT;

/// Predicted E6 code alignment derived from the authenticated-band tracking.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct HandoverPrediction {
    /// Predicted transmit time of the signal received at the epoch, s.
    pub t_tx: f64,
    /// Predicted code phase in the encrypted band, m.
    pub predicted_offset: f64,
    /// Doppler scaled to the encrypted-band carrier, Hz.
    pub predicted_doppler: f64,
    pub correction_terms: CorrectionTerms,
}

/// Inter-frequency corrections applied during handover, individually kept
/// for audit.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CorrectionTerms {
    pub bgd: f64,
    pub hw_offset: f64,
    pub iono: f64,
}

/// Detector tuning shared by both algorithms.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionConfig {
    /// Single-event false alarm probability.
    pub pfa: f64,
    pub n_correlators: usize,
    /// Correlator grid spacing, m.
    pub spacing: f64,
    /// S-curve / early-detector correlator stride (in grid elements).
    pub early_late_gap: usize,
    pub algorithm: Algorithm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Maximum,
    Early,
}

impl DetectionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.pfa > 0.0 && self.pfa < 1.0) {
            return Err(Error::config("detection.pfa", "must be in (0, 1)"));
        }
        if self.early_late_gap < 1 {
            return Err(Error::config("detection.early_late_gap", "must be >= 1"));
        }
        if self.n_correlators < 2 * self.early_late_gap + 1 {
            return Err(Error::config(
                "detection.n_correlators",
                "must be >= 2*early_late_gap + 1",
            ));
        }
        if !(self.spacing > 0.0) {
            return Err(Error::config("detection.spacing", "must be > 0"));
        }
        Ok(())
    }
}

/// Per-epoch outcome of the detection stage.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DetectionReport {
    pub epoch: f64,
    pub detected: bool,
    /// Winning correlator index into the grid (0-based), if any.
    pub index: Option<usize>,
    pub algorithm: Algorithm,
    pub threshold: f64,
    pub peak_magnitude: f64,
    pub peak_phase: f64,
    /// Range offset vs. the cross-band prediction from the s-curve root, m.
    pub range_offset: Option<f64>,
    /// Same offset from the literal interpolation formula (kept for
    /// comparison; twice the root on an ideal triangle).
    pub range_offset_literal: Option<f64>,
    pub flags: DetectionFlags,
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct DetectionFlags {
    pub missed: bool,
    pub spoof_suspected: bool,
    /// Detection settled on a correlation flank (s-curve residual beyond one
    /// grid spacing).
    pub flank_trigger: bool,
}

/// Predict the encrypted-band code phase from an authenticated-band
/// measurement: t_tx = t_rx - P/c, plus inter-frequency corrections.
///
/// `iono_estimate_m` is the user's differential ionosphere estimate (zero if
/// uncorrected); `e6_f_carrier_hz` scales the Doppler prediction.
pub fn handover_e1_to_e6(
    m: &E1Measurement,
    cfg: &ChannelConfig,
    e6_f_carrier_hz: f64,
    iono_estimate_m: f64,
) -> Result<HandoverPrediction> {
    if !(m.epoch.is_finite() && m.pseudorange.is_finite() && m.doppler.is_finite()) {
        return Err(Error::InvalidInput("non-finite measurement".into()));
    }
    if !(iono_estimate_m.is_finite() && e6_f_carrier_hz > 0.0) {
        return Err(Error::InvalidInput("non-finite handover corrections".into()));
    }
    let corrections = CorrectionTerms {
        bgd: cfg.bgd_m,
        hw_offset: cfg.hw_offset_m,
        iono: iono_estimate_m,
    };
    Ok(HandoverPrediction {
        t_tx: m.epoch - m.pseudorange / SPEED_OF_LIGHT,
        predicted_offset: m.pseudorange + corrections.bgd + corrections.hw_offset + corrections.iono,
        predicted_doppler: m.doppler * e6_f_carrier_hz / cfg.e1_f_carrier_hz,
        correction_terms: corrections,
    })
}

/// Strongest correlator at or above the threshold, earliest index on ties.
pub fn detect_max(c: &CorrelatorVector, threshold: f64) -> Option<usize> {
    let mags = c.magnitudes();
    let mut best: Option<usize> = None;
    for (i, &m) in mags.iter().enumerate() {
        if m >= threshold && best.map_or(true, |b| m > mags[b]) {
            best = Some(i);
        }
    }
    best
}

/// Earliest admissible peak at or above the threshold.
///
/// Scan early-to-late for the first punctual value above the threshold,
/// climb to the local maximum, then slide by single indices as long as the
/// early/late imbalance D_i = ||c_{i+n}| - |c_{i-n}|| strictly decreases and
/// the index stays admissible (above threshold and a strict local maximum).
/// An inadmissible landing spot resumes the scan further late.
pub fn detect_early(c: &CorrelatorVector, threshold: f64, n: usize) -> Option<usize> {
    let mags = c.magnitudes();
    let len = mags.len();
    assert!(n >= 1 && len >= 2 * n + 1, "need at least 2n+1 correlators");
    let admissible = |i: usize| -> bool {
        i >= n && i + n < len && mags[i] >= threshold && mags[i] > mags[i - 1] && mags[i] > mags[i + 1]
    };
    let imbalance = |i: usize| -> f64 {
        if i >= n && i + n < len {
            (mags[i + n] - mags[i - n]).abs()
        } else {
            f64::INFINITY
        }
    };
    let mut cursor = n;
    while cursor + n < len {
        let first = match (cursor..len - n).find(|&i| mags[i] >= threshold) {
            Some(i) => i,
            None => return None,
        };
        let mut i = first;
        while i + 1 < len && mags[i + 1] > mags[i] {
            i += 1;
        }
        if !admissible(i) {
            cursor = i + 1;
            continue;
        }
        loop {
            let mut next = i;
            let mut best_d = imbalance(i);
            // Earlier neighbor first, so ties keep the earlier index.
            for j in [i.wrapping_sub(1), i + 1] {
                if j < len && admissible(j) && imbalance(j) < best_d {
                    next = j;
                    best_d = imbalance(j);
                }
            }
            if next == i {
                return Some(i);
            }
            i = next;
        }
    }
    None
}

/// Code-phase offset of the correlation peak relative to the punctual
/// correlator from the early/punctual/late magnitudes.
///
/// The two same-flank correlators set the slope; the root is the
/// intersection of that line through the punctual value with the
/// opposite-slope line through the higher outer correlator. Positive toward
/// the larger of early/late; `spacing_m` is the early-punctual distance.
pub fn scurve_root(c_e: f64, c_p: f64, c_l: f64, spacing_m: f64) -> Result<f64> {
    if !(spacing_m > 0.0) {
        return Err(Error::InvalidInput("correlator spacing must be > 0".into()));
    }
    let c_max = c_e.max(c_l);
    let c_min = c_e.min(c_l);
    if c_p <= c_min {
        return Err(Error::Estimation(format!(
            "degenerate correlator triple ({c_e}, {c_p}, {c_l}): no flank slope"
        )));
    }
    let alpha = (c_p - c_min) / spacing_m;
    let magnitude = spacing_m / 2.0 + (c_max - c_p) / (2.0 * alpha);
    let sign = if c_l > c_e {
        1.0
    } else if c_e > c_l {
        -1.0
    } else {
        return Ok(0.0);
    };
    Ok(sign * magnitude)
}

/// Literal linear-interpolation formula for the same offset:
/// (c_max - c_min)/(c_p - c_min) · spacing, signed toward the larger flank.
/// Evaluates to twice `scurve_root` on an ideal triangle; recorded for
/// comparison only.
pub fn scurve_eq_literal(c_e: f64, c_p: f64, c_l: f64, spacing_m: f64) -> Result<f64> {
    if !(spacing_m > 0.0) {
        return Err(Error::InvalidInput("correlator spacing must be > 0".into()));
    }
    let c_max = c_e.max(c_l);
    let c_min = c_e.min(c_l);
    if c_p <= c_min {
        return Err(Error::Estimation(format!(
            "degenerate correlator triple ({c_e}, {c_p}, {c_l})"
        )));
    }
    let magnitude = (c_max - c_min) / (c_p - c_min) * spacing_m;
    let sign = if c_l > c_e {
        1.0
    } else if c_e > c_l {
        -1.0
    } else {
        return Ok(0.0);
    };
    Ok(sign * magnitude)
}
