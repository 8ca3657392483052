//! Vestigial signal search: find every plausible signal, not just the
//! strongest one.
//!
//! A meaconer can delay but not advance a signal, so when more than one
//! correlation peak is found the earliest is the authentic one and the rest
//! are spoofing evidence. The search runs either blind over the whole time
//! uncertainty (exhaustive) or seeded by open-signal peaks whose code phase
//! is known modulo one E1 period (handover).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::SampleBatch;
use crate::correlator::{lag_correlation, xcorr_fft, Replica};
use crate::detector::theory::{single_event_pfa, SearchMode, SearchPlan};
use crate::error::{Error, Result};
use crate::signal::{CodeSequence, SignalParams};
use crate::SPEED_OF_LIGHT;

/// Time-uncertainty ceiling for the exhaustive search without an explicit
/// override; beyond this the hypothesis grid is budget math, not something
/// to evaluate sample by sample on a desk.
pub const EXHAUSTIVE_DELTA_T_GUARD_S: f64 = 0.05;

/// One signal found by a search.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct VssDetection {
    /// Code offset, m. Absolute within the searched uncertainty for the E6
    /// searches; modulo one code period for the E1 scan.
    pub offset_m: f64,
    pub doppler_hz: f64,
    pub magnitude: f64,
}

/// Outcome of a vestigial search in the encrypted band.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VssResult {
    /// All detections, sorted by ascending offset.
    pub detections: Vec<VssDetection>,
    /// Index into `detections` of the minimum offset (the authentic
    /// candidate), if any.
    pub earliest_index: Option<usize>,
    /// Two or more signals present.
    pub spoof_declared: bool,
    /// Indices of seed peaks with no encrypted-band counterpart; those are
    /// declared inauthentic.
    pub unverified_e1: Vec<usize>,
}

impl VssResult {
    fn from_detections(mut detections: Vec<VssDetection>, unverified_e1: Vec<usize>) -> Self {
        detections.sort_by(|a, b| a.offset_m.total_cmp(&b.offset_m));
        VssResult {
            earliest_index: if detections.is_empty() { None } else { Some(0) },
            spoof_declared: detections.len() >= 2,
            detections,
            unverified_e1,
        }
    }
}

/// Robust signal-absent power level from the magnitudes of a hypothesis
/// grid: the lower quartile of |c|² tolerates up to 75% of the samples
/// sitting on true peaks or their flanks (relevant for the narrow handover
/// boxes), and for exponential noise power the quartile is ln(4/3) times
/// the mean.
fn robust_noise_power(mags_sq: &mut [f64]) -> f64 {
    assert!(!mags_sq.is_empty());
    let idx = mags_sq.len() / 4;
    mags_sq.select_nth_unstable_by(idx, |a, b| a.total_cmp(b));
    mags_sq[idx] / (4.0f64 / 3.0).ln()
}

/// Threshold on magnitude given a noise power estimate, with a relative
/// floor so noiseless grids (median exactly zero) do not detect numerical
/// residue.
fn threshold_from(noise_power: f64, peak_mag: f64, pfa: f64) -> f64 {
    let floor = (1e-4 * peak_mag).powi(2);
    (-noise_power.max(floor) * pfa.ln()).sqrt()
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    offset_m: f64,
    doppler_hz: f64,
    magnitude: f64,
}

/// Merge above-threshold local maxima that fall within one code chip into
/// single detections, keeping the strongest member of each cluster.
fn cluster(mut candidates: Vec<Candidate>, chip_m: f64) -> Vec<VssDetection> {
    candidates.sort_by(|a, b| a.offset_m.total_cmp(&b.offset_m));
    let mut out: Vec<VssDetection> = Vec::new();
    for c in candidates {
        match out.last_mut() {
            Some(last) if (c.offset_m - last.offset_m).abs() <= chip_m => {
                if c.magnitude > last.magnitude {
                    *last = VssDetection {
                        offset_m: c.offset_m,
                        doppler_hz: c.doppler_hz,
                        magnitude: c.magnitude,
                    };
                }
            }
            _ => out.push(VssDetection {
                offset_m: c.offset_m,
                doppler_hz: c.doppler_hz,
                magnitude: c.magnitude,
            }),
        }
    }
    out
}

/// Local maxima of a magnitude sequence (strictly above both neighbors;
/// edges count when above their single neighbor).
fn local_maxima(mags: &[f64]) -> impl Iterator<Item = usize> + '_ {
    (0..mags.len()).filter(move |&i| {
        let left_ok = i == 0 || mags[i] > mags[i - 1];
        let right_ok = i + 1 == mags.len() || mags[i] >= mags[i + 1];
        left_ok && right_ok
    })
}

/// Full circular search over one open-signal code period, across a small
/// Doppler fan of width 1/(2 t_i) per bin.
///
/// Returns every above-threshold local maximum: one for a clean signal, two
/// or more when a delayed replica is present, none for pure noise (up to the
/// per-hypothesis false alarm probability `pfa`).
pub fn vss_e1_scan(
    e1_batch: &SampleBatch,
    e1_code: &CodeSequence,
    t_i: f64,
    pfa: f64,
) -> Result<Vec<VssDetection>> {
    if !(pfa > 0.0 && pfa < 1.0) {
        return Err(Error::InvalidInput(format!("pfa out of range: {pfa}")));
    }
    let fs = e1_batch.fs;
    let period_samples = (e1_code.period_s() * fs).round() as usize;
    if e1_batch.len() < period_samples {
        return Err(Error::BatchTooShort {
            needed: period_samples,
            have: e1_batch.len(),
        });
    }
    let replica: Vec<Complex64> = (0..period_samples)
        .map(|n| Complex64::new(e1_code.value_at(n as f64 / fs), 0.0))
        .collect();
    let bin_width = 1.0 / (2.0 * t_i);
    let bins: Vec<f64> = (-2i32..=2).map(|k| k as f64 * bin_width).collect();

    let mut planner = rustfft::FftPlanner::new();
    let fft = planner.plan_fft_forward(period_samples);
    let ifft = planner.plan_fft_inverse(period_samples);
    let mut rep_f: Vec<Complex64> = replica.clone();
    fft.process(&mut rep_f);

    let mut best_mag = vec![0.0f64; period_samples];
    let mut best_bin = vec![0.0f64; period_samples];
    for &freq in &bins {
        // Doppler wipe-off, then circular correlation against the code.
        let mut x: Vec<Complex64> = (0..period_samples)
            .map(|n| {
                e1_batch.samples[n]
                    * Complex64::from_polar(1.0, -std::f64::consts::TAU * freq * n as f64 / fs)
            })
            .collect();
        fft.process(&mut x);
        for (xi, ri) in x.iter_mut().zip(rep_f.iter()) {
            *xi *= ri.conj();
        }
        ifft.process(&mut x);
        let scale = 1.0 / period_samples as f64;
        for (d, v) in x.iter().enumerate() {
            let mag = v.norm() * scale;
            if mag > best_mag[d] {
                best_mag[d] = mag;
                best_bin[d] = freq;
            }
        }
    }

    let mut mags_sq: Vec<f64> = best_mag.iter().map(|m| m * m).collect();
    let peak = best_mag.iter().cloned().fold(0.0, f64::max);
    let noise_power = robust_noise_power(&mut mags_sq);
    let threshold = threshold_from(noise_power, peak, pfa);

    let candidates: Vec<Candidate> = local_maxima(&best_mag)
        .filter(|&d| best_mag[d] > threshold)
        .map(|d| Candidate {
            offset_m: d as f64 * SPEED_OF_LIGHT / fs,
            doppler_hz: best_bin[d],
            magnitude: best_mag[d],
        })
        .collect();
    Ok(cluster(candidates, e1_code.chip_length_m())
        .into_iter()
        .collect())
}

/// E6 verification of open-signal peaks: the code phase is known modulo one
/// E1 period, so only a narrow box around each period multiple is tested
/// across the time uncertainty.
///
/// `e1_peaks` are code offsets (m, within one period) from `vss_e1_scan`;
/// `overall_pfa` is spread over the plan's hypothesis count.
pub fn vss_handover_search(
    e1_peaks: &[f64],
    e6_batch: &SampleBatch,
    recs: &SignalParams,
    plan: &SearchPlan,
    overall_pfa: f64,
) -> Result<VssResult> {
    if plan.mode != SearchMode::Handover {
        return Err(Error::InvalidInput("handover search needs a handover plan".into()));
    }
    if e1_peaks.is_empty() {
        return Err(Error::InvalidInput("no seed peaks to verify".into()));
    }
    let fs = e6_batch.fs;
    let t_i = recs.recs_length_s;
    let m_samples = (t_i * fs).round() as usize;
    if e6_batch.len() < m_samples {
        return Err(Error::BatchTooShort {
            needed: m_samples,
            have: e6_batch.len(),
        });
    }
    let replica = Replica::generate(recs, |_| 0.0, e6_batch.t_start, fs, m_samples, 0)?;
    let rep = replica.slice(0, m_samples);
    let chip_m = recs.code.chip_length_m();
    let halfwidth_m = 2.5 * chip_m;
    let halfwidth_lags = (halfwidth_m / SPEED_OF_LIGHT * fs).round() as i64;
    let max_lag = e6_batch.len() - m_samples;
    let period_m = plan.e1_period * SPEED_OF_LIGHT;

    // Evaluate every box; remember magnitudes per box for local maxima.
    let mut boxes: Vec<(usize, Vec<(usize, f64)>)> = Vec::new();
    let mut all_sq: Vec<f64> = Vec::new();
    let mut peak = 0.0f64;
    for (pi, &p) in e1_peaks.iter().enumerate() {
        for k in 0..plan.n_code_offsets {
            let center_m = p + k as f64 * period_m;
            let center_lag = (center_m / SPEED_OF_LIGHT * fs).round() as i64;
            let lo = (center_lag - halfwidth_lags).max(0) as usize;
            let hi = (center_lag + halfwidth_lags).min(max_lag as i64);
            if hi < lo as i64 {
                continue;
            }
            let lags: Vec<(usize, f64)> = (lo..=hi as usize)
                .map(|d| (d, lag_correlation(&e6_batch.samples, rep, d).norm()))
                .collect();
            for &(_, m) in &lags {
                all_sq.push(m * m);
                peak = peak.max(m);
            }
            boxes.push((pi, lags));
        }
    }
    if all_sq.is_empty() {
        return Err(Error::InvalidInput("search boxes fall outside the batch".into()));
    }
    // The boxes alone are a small, peak-contaminated sample; widen the
    // noise estimate with evenly spaced probe lags across the batch. The
    // probes only feed the estimate, never the detections.
    let n_box_lags = all_sq.len() as u64;
    for k in 0..64 {
        let d = k * max_lag / 64;
        let m = lag_correlation(&e6_batch.samples, rep, d).norm();
        all_sq.push(m * m);
    }
    // Spread the campaign budget over every lag actually tested.
    let pfa = single_event_pfa(overall_pfa, n_box_lags)?;
    let noise_power = robust_noise_power(&mut all_sq);
    let threshold = threshold_from(noise_power, peak, pfa);

    let mut candidates = Vec::new();
    let mut verified = vec![false; e1_peaks.len()];
    for (pi, lags) in &boxes {
        let mags: Vec<f64> = lags.iter().map(|&(_, m)| m).collect();
        for i in local_maxima(&mags) {
            if mags[i] > threshold {
                verified[*pi] = true;
                candidates.push(Candidate {
                    offset_m: lags[i].0 as f64 * SPEED_OF_LIGHT / fs,
                    doppler_hz: 0.0,
                    magnitude: mags[i],
                });
            }
        }
    }
    let unverified: Vec<usize> = (0..e1_peaks.len()).filter(|&i| !verified[i]).collect();
    Ok(VssResult::from_detections(cluster(candidates, chip_m), unverified))
}

/// Blind search over the full time uncertainty at sample-level lag stepping.
///
/// Refuses uncertainties beyond [`EXHAUSTIVE_DELTA_T_GUARD_S`] unless
/// explicitly overridden: the budget for large uncertainties is what
/// [`crate::detector::theory::plan_exhaustive`] is for.
pub fn vss_exhaustive_search(
    e6_batch: &SampleBatch,
    recs: &SignalParams,
    plan: &SearchPlan,
    overall_pfa: f64,
    override_guard: bool,
) -> Result<VssResult> {
    if plan.mode != SearchMode::Exhaustive {
        return Err(Error::InvalidInput("exhaustive search needs an exhaustive plan".into()));
    }
    if plan.delta_t > EXHAUSTIVE_DELTA_T_GUARD_S && !override_guard {
        return Err(Error::ResourceGuard {
            delta_t: plan.delta_t,
            limit: EXHAUSTIVE_DELTA_T_GUARD_S,
        });
    }
    let fs = e6_batch.fs;
    let t_i = recs.recs_length_s;
    let m_samples = (t_i * fs).round() as usize;
    if e6_batch.len() < m_samples {
        return Err(Error::BatchTooShort {
            needed: m_samples,
            have: e6_batch.len(),
        });
    }
    let replica = Replica::generate(recs, |_| 0.0, e6_batch.t_start, fs, m_samples, 0)?;
    let rep = replica.slice(0, m_samples);
    let wanted_lags = (plan.delta_t * fs).round() as usize + 1;
    let n_lags = wanted_lags.min(e6_batch.len() - m_samples + 1);
    // Spread the campaign budget over every lag actually tested.
    let pfa = single_event_pfa(overall_pfa, n_lags as u64)?;
    let corr = xcorr_fft(&e6_batch.samples[..m_samples + n_lags - 1], rep);
    let mags: Vec<f64> = corr.iter().map(|c| c.norm()).collect();
    let mut mags_sq: Vec<f64> = mags.iter().map(|m| m * m).collect();
    let peak = mags.iter().cloned().fold(0.0, f64::max);
    let noise_power = robust_noise_power(&mut mags_sq);
    let threshold = threshold_from(noise_power, peak, pfa);

    let candidates: Vec<Candidate> = local_maxima(&mags)
        .filter(|&d| mags[d] > threshold)
        .map(|d| Candidate {
            offset_m: d as f64 * SPEED_OF_LIGHT / fs,
            doppler_hz: 0.0,
            magnitude: mags[d],
        })
        .collect();
    Ok(VssResult::from_detections(
        cluster(candidates, recs.code.chip_length_m()),
        Vec::new(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detector::theory::{plan_exhaustive, plan_handover};
    use crate::signal::{generate_samples, synthesize_at, DynamicsParams};
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::Distribution;

    const E1_CHIP_RATE: f64 = 1.023e6;
    const E1_FS: f64 = 4.092e6;

    fn e1_code(seed: u64) -> CodeSequence {
        CodeSequence::pseudorandom(seed, 4092, E1_CHIP_RATE).unwrap()
    }

    fn e6_signal(seed: u64) -> SignalParams {
        // An encrypted code does not repeat within the searched uncertainty,
        // so the test code is longer than any batch below; only 4 ms of it
        // is integrated.
        SignalParams {
            carrier_offset_hz: 0.0,
            code: CodeSequence::pseudorandom(seed, 160_000, 5.115e6).unwrap(),
            recs_length_s: 0.004,
            amplitude: 1.0,
            f_carrier_hz: crate::signal::DEFAULT_F_CARRIER_HZ,
        }
    }

    fn static_range(s0: f64) -> DynamicsParams {
        DynamicsParams {
            s0,
            v: 0.0,
            a: 0.0,
            sin_amp: 0.0,
            sin_rate: 0.0,
        }
    }

    fn e1_batch_with(code: &CodeSequence, offsets_amps: &[(f64, f64)], noise_sigma: f64, seed: u64) -> SampleBatch {
        let n = (code.period_s() * E1_FS).round() as usize;
        let mut samples = vec![Complex64::default(); n];
        for &(offset_m, amp) in offsets_amps {
            let sig = SignalParams {
                carrier_offset_hz: 0.0,
                code: code.clone(),
                recs_length_s: code.period_s(),
                amplitude: amp,
                f_carrier_hz: 1575.42e6,
            };
            let d = static_range(offset_m);
            let part = generate_samples(&sig, &d, 0.0, E1_FS, n).unwrap();
            for (s, p) in samples.iter_mut().zip(part) {
                *s += p;
            }
        }
        if noise_sigma > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let normal = rand_distr::Normal::new(0.0, noise_sigma).unwrap();
            for s in &mut samples {
                *s += Complex64::new(normal.sample(&mut rng), normal.sample(&mut rng));
            }
        }
        SampleBatch {
            t_start: 0.0,
            fs: E1_FS,
            samples,
            e1_sample_anchor: 0,
        }
    }

    #[test]
    fn e1_scan_single_signal() {
        let code = e1_code(21);
        let offset = 90_000.0 % (code.period_s() * SPEED_OF_LIGHT);
        let batch = e1_batch_with(&code, &[(offset, 1.0)], 5.0, 1);
        let dets = vss_e1_scan(&batch, &code, code.period_s(), 1e-7).unwrap();
        assert_eq!(dets.len(), 1, "detections: {dets:?}");
        let quant = SPEED_OF_LIGHT / E1_FS;
        assert!((dets[0].offset_m - offset).abs() <= quant, "offset {} vs {offset}", dets[0].offset_m);
    }

    #[test]
    fn e1_scan_spoofed_pair() {
        let code = e1_code(22);
        let base = 40_000.0;
        let batch = e1_batch_with(&code, &[(base, 1.0), (base + 450.0, 2f64.sqrt())], 5.0, 2);
        let dets = vss_e1_scan(&batch, &code, code.period_s(), 1e-7).unwrap();
        assert_eq!(dets.len(), 2, "detections: {dets:?}");
        let sep = dets[1].offset_m - dets[0].offset_m;
        assert!((sep - 450.0).abs() <= 2.0 * SPEED_OF_LIGHT / E1_FS, "separation {sep}");
    }

    #[test]
    fn e1_scan_pure_noise_is_quiet() {
        let code = e1_code(23);
        let mut false_scans = 0;
        for trial in 0..20 {
            let batch = e1_batch_with(&code, &[], 5.0, 100 + trial);
            let dets = vss_e1_scan(&batch, &code, code.period_s(), 1e-7).unwrap();
            if !dets.is_empty() {
                false_scans += 1;
            }
        }
        assert_eq!(false_scans, 0, "noise-only scans produced detections");
    }

    #[test]
    fn e1_scan_short_batch_errors() {
        let code = e1_code(24);
        let batch = SampleBatch {
            t_start: 0.0,
            fs: E1_FS,
            samples: vec![Complex64::default(); 100],
            e1_sample_anchor: 0,
        };
        assert!(vss_e1_scan(&batch, &code, code.period_s(), 1e-7).is_err());
    }

    fn e6_batch_with(sig: &SignalParams, offsets_amps: &[(f64, f64)], duration_s: f64, noise_sigma: f64, seed: u64) -> SampleBatch {
        let fs = 10.23e6;
        let n = (duration_s * fs).round() as usize;
        let mut samples = vec![Complex64::default(); n];
        for &(offset_m, amp) in offsets_amps {
            let part = synthesize_at(
                sig,
                |_| offset_m,
                |_| amp,
                0.0,
                (0..n).map(|k| k as f64 / fs),
            )
            .unwrap();
            for (s, p) in samples.iter_mut().zip(part) {
                *s += p;
            }
        }
        if noise_sigma > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let normal = rand_distr::Normal::new(0.0, noise_sigma).unwrap();
            for s in &mut samples {
                *s += Complex64::new(normal.sample(&mut rng), normal.sample(&mut rng));
            }
        }
        SampleBatch {
            t_start: 0.0,
            fs,
            samples,
            e1_sample_anchor: 0,
        }
    }

    #[test]
    fn handover_single_signal_no_spoof() {
        let sig = e6_signal(31);
        let plan = plan_handover(0.02, 0.004).unwrap();
        let true_offset = 2.0 * 0.004 * SPEED_OF_LIGHT + 500.0;
        let batch = e6_batch_with(&sig, &[(true_offset, 1.0)], 0.025, 1.0, 3);
        let result = vss_handover_search(&[500.0], &batch, &sig, &plan, 1e-3).unwrap();
        assert_eq!(result.detections.len(), 1, "{:?}", result.detections);
        assert!(!result.spoof_declared);
        assert!(result.unverified_e1.is_empty());
        let quant = SPEED_OF_LIGHT / batch.fs;
        assert!((result.detections[0].offset_m - true_offset).abs() <= quant);
    }

    #[test]
    fn handover_meaconed_pair_declares_spoof() {
        let sig = e6_signal(32);
        let plan = plan_handover(0.02, 0.004).unwrap();
        let auth = 1.0 * 0.004 * SPEED_OF_LIGHT + 800.0;
        let spoof = auth + 600.0;
        let batch = e6_batch_with(&sig, &[(auth, 1.0), (spoof, 1.4)], 0.025, 1.0, 4);
        // Both bands see both signals: two seed peaks, 600 m apart.
        let result = vss_handover_search(&[800.0, 1400.0], &batch, &sig, &plan, 1e-3).unwrap();
        assert!(result.spoof_declared, "{:?}", result.detections);
        assert_eq!(result.detections.len(), 2);
        let earliest = &result.detections[result.earliest_index.unwrap()];
        let quant = SPEED_OF_LIGHT / batch.fs;
        assert!(
            (earliest.offset_m - auth).abs() <= quant,
            "earliest {} vs authentic {auth} (stronger spoof at {spoof})",
            earliest.offset_m
        );
    }

    #[test]
    fn handover_e1_only_peak_is_unverified() {
        let sig = e6_signal(33);
        let plan = plan_handover(0.02, 0.004).unwrap();
        let auth = 3.0 * 0.004 * SPEED_OF_LIGHT + 200.0;
        let batch = e6_batch_with(&sig, &[(auth, 1.0)], 0.025, 1.0, 5);
        // Second seed peak has no encrypted-band counterpart.
        let result = vss_handover_search(&[200.0, 900.0], &batch, &sig, &plan, 1e-5).unwrap();
        assert_eq!(result.unverified_e1, vec![1]);
        assert_eq!(result.detections.len(), 1);
        assert!(!result.spoof_declared);
    }

    #[test]
    fn handover_requires_seeds_and_mode() {
        let sig = e6_signal(34);
        let plan = plan_handover(0.02, 0.004).unwrap();
        let batch = e6_batch_with(&sig, &[(100.0, 1.0)], 0.025, 0.0, 6);
        assert!(vss_handover_search(&[], &batch, &sig, &plan, 1e-3).is_err());
        let wrong = plan_exhaustive(0.02, 60.0, 0.004, 0.0).unwrap();
        assert!(vss_handover_search(&[100.0], &batch, &sig, &wrong, 1e-3).is_err());
    }

    #[test]
    fn exhaustive_matches_handover_on_two_signal_scenario() {
        let sig = e6_signal(35);
        let auth = 1.0 * 0.004 * SPEED_OF_LIGHT + 800.0;
        let spoof = auth + 600.0;
        let batch = e6_batch_with(&sig, &[(auth, 1.0), (spoof, 1.4)], 0.025, 1.0, 7);
        let h_plan = plan_handover(0.02, 0.004).unwrap();
        let h = vss_handover_search(&[800.0, 1400.0], &batch, &sig, &h_plan, 1e-3).unwrap();
        let e_plan = plan_exhaustive(0.02, sig.code.chip_length_m(), 0.004, 0.0).unwrap();
        let e = vss_exhaustive_search(&batch, &sig, &e_plan, 1e-3, false).unwrap();
        assert_eq!(e.detections.len(), h.detections.len());
        for (de, dh) in e.detections.iter().zip(&h.detections) {
            assert_relative_eq!(de.offset_m, dh.offset_m, epsilon = 1e-9);
        }
        assert!(e.spoof_declared);
    }

    #[test]
    fn exhaustive_single_signal_no_spoof() {
        let sig = e6_signal(36);
        let batch = e6_batch_with(&sig, &[(2000.0, 1.0)], 0.025, 1.0, 8);
        let plan = plan_exhaustive(0.02, sig.code.chip_length_m(), 0.004, 0.0).unwrap();
        let result = vss_exhaustive_search(&batch, &sig, &plan, 1e-3, false).unwrap();
        assert_eq!(result.detections.len(), 1, "{:?}", result.detections);
        assert!(!result.spoof_declared);
    }

    #[test]
    fn exhaustive_resource_guard() {
        let sig = e6_signal(37);
        let batch = e6_batch_with(&sig, &[(2000.0, 1.0)], 0.025, 0.0, 9);
        let plan = plan_exhaustive(30.0, sig.code.chip_length_m(), 0.004, 5000.0).unwrap();
        let err = vss_exhaustive_search(&batch, &sig, &plan, 1e-3, false).unwrap_err();
        assert!(matches!(err, Error::ResourceGuard { .. }), "got {err:?}");
    }
}
