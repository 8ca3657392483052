//! Monte Carlo campaign orchestration: one detection chain evaluation per
//! epoch, aggregated into result tables and a summary.
//!
//! Epochs are independent given the clock-state sequence, so they run on a
//! thread pool; every noise draw comes from a sub-stream keyed by (seed,
//! epoch, purpose), which makes the output identical regardless of
//! execution order. The clock sequence itself is precomputed sequentially
//! first.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{
    add_awgn, capture_batch, clock_step, make_e1_measurement, sample_iono_error, CaptureRngs,
    CaptureSpec, ClockState, SampleBatch,
};
use crate::correlator::{correlate_grid, CorrelatorVector, NoiseFloor, Replica};
use crate::detector::theory::{detection_threshold, plan_exhaustive, plan_handover};
use crate::detector::vss::{vss_e1_scan, vss_exhaustive_search, vss_handover_search, VssResult};
use crate::detector::{
    detect_early, detect_max, handover_e1_to_e6, scurve_eq_literal, scurve_root, Algorithm,
    DetectionFlags, DetectionReport,
};
use crate::error::{Error, Result};
use crate::mitigation::{run_level, Alarm, AuthVerdict, EpochInputs};
use crate::rng::{substream, Stream};
use crate::scenario::ScenarioConfig;
use crate::signal::{synthesize_at, CodeSequence, SignalParams};
use crate::SPEED_OF_LIGHT;

/// Open-signal scan front-end parameters (fixed; the open band is public).
const E1_CHIP_RATE: f64 = 1.023e6;
const E1_CODE_CHIPS: usize = 4092;
const E1_FS: f64 = 4.092e6;
const E1_CARRIER_HZ: f64 = 1_575.42e6;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CampaignSummary {
    pub epochs: u64,
    pub missed: u64,
    pub pd_estimate: f64,
    pub false_alarms: u64,
    pub spoof_detected_epochs: u64,
    pub mean_range_offset: f64,
    pub range_offset_p99: f64,
    pub peak_accel_observed: f64,
    pub auth_failed_epochs: u64,
}

/// One fully-evaluated epoch.
#[derive(Debug, Clone)]
pub struct EpochRow {
    pub epoch: f64,
    pub corr: CorrelatorVector,
    pub report: DetectionReport,
    pub verdict: AuthVerdict,
    pub vss: Option<VssResult>,
    /// True code offset relative to the handover prediction, m.
    pub truth_offset: f64,
    pub false_alarm: bool,
    pub cn0: f64,
    pub batch_power: f64,
}

#[derive(Debug)]
pub struct CampaignOutput {
    pub rows: Vec<EpochRow>,
    pub summary: CampaignSummary,
}

struct EpochCore {
    epoch: f64,
    corr: CorrelatorVector,
    report: DetectionReport,
    vss: Option<VssResult>,
    truth_offset: f64,
    false_alarm: bool,
    cn0: f64,
    batch_power: f64,
}

fn e1_signal(cfg: &ScenarioConfig) -> Result<SignalParams> {
    Ok(SignalParams {
        carrier_offset_hz: 0.0,
        code: CodeSequence::pseudorandom(
            cfg.signal.code_seed ^ 0xe1,
            E1_CODE_CHIPS,
            E1_CHIP_RATE,
        )?,
        recs_length_s: E1_CODE_CHIPS as f64 / E1_CHIP_RATE,
        amplitude: 1.0,
        f_carrier_hz: E1_CARRIER_HZ,
    })
}

/// Open-band snapshot over one code period, with optional spoof replica and
/// noise, sampled through the same receiver clock as everything else.
fn make_e1_batch(
    cfg: &ScenarioConfig,
    e1_sig: &SignalParams,
    t_rx: f64,
    clock: &ClockState,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Result<SampleBatch> {
    let n = (e1_sig.recs_length_s * E1_FS).round() as usize;
    let dynamics = cfg.dynamics;
    let samples = synthesize_at(
        e1_sig,
        |t| dynamics.range(t),
        |_| 1.0,
        0.0,
        (0..n).map(|k| {
            let t = t_rx + k as f64 / E1_FS;
            t - clock.bias_at(t)
        }),
    )?;
    let mut batch = SampleBatch {
        t_start: t_rx,
        fs: E1_FS,
        samples,
        e1_sample_anchor: 0,
    };
    if let Some(profile) = &cfg.spoof {
        if profile.e1_presence {
            crate::spoofer::inject_spoofer(
                &mut batch,
                e1_sig,
                |t| dynamics.range(t),
                clock,
                profile,
                rng,
            )?;
        }
    }
    Ok(add_awgn(&batch, cfg.channel.cn0_dbhz, rng))
}

fn compute_epoch(
    cfg: &ScenarioConfig,
    e1_sig: &SignalParams,
    k: usize,
    clock: &ClockState,
) -> Result<EpochCore> {
    let t_rx = (k as f64 + 1.0) * cfg.epoch_interval;
    let ku = k as u64;
    let seed = cfg.seed;
    let det = &cfg.detection;
    let fs = cfg.channel.fs;
    let t_i = cfg.signal.recs_length_s;
    let m_samples = (t_i * fs).round() as usize;
    let run_vss = cfg.mitigation.level >= 2;

    // Per-epoch error draws and observables.
    let iono_m = sample_iono_error(&cfg.channel.iono, &mut substream(seed, ku, Stream::Iono))?;
    let extra_delay = cfg.channel.bgd_m + cfg.channel.hw_offset_m + iono_m;
    let mut m = make_e1_measurement(
        t_rx,
        &cfg.dynamics,
        clock,
        &cfg.channel,
        &mut substream(seed, ku, Stream::E1Measurement),
    );
    if let Some(profile) = &cfg.spoof {
        crate::spoofer::bias_e1_measurement(
            &mut m,
            profile,
            &mut substream(seed, ku, Stream::Spoofer),
        );
    }
    let handover = handover_e1_to_e6(&m, &cfg.channel, cfg.signal.f_carrier_hz, 0.0)?;

    // Encrypted-band snapshot. Levels >= 2 capture one extra code period so
    // the vestigial search can scan every lag.
    let sig = cfg.signal.signal_for_epoch(ku)?;
    let period_s = sig.code.period_s();
    let period_samples = (period_s * fs).round() as usize;
    let duration = if run_vss {
        (m_samples + period_samples - 1) as f64 / fs
    } else {
        t_i
    };
    let mut mp_rng = substream(seed, ku, Stream::Multipath);
    let mut awgn_rng = substream(seed, ku, Stream::Awgn);
    let mut spoof_rng = substream(seed, ku, Stream::Spoofer);
    let batch = capture_batch(
        &CaptureSpec {
            sig: &sig,
            dynamics: &cfg.dynamics,
            extra_delay_m: extra_delay,
            clock: *clock,
            spoof: cfg.spoof.as_ref(),
            t_rx_start: t_rx,
            duration_s: duration,
        },
        &cfg.channel,
        &mut CaptureRngs {
            multipath: &mut mp_rng,
            awgn: &mut awgn_rng,
            spoofer: &mut spoof_rng,
        },
    )?;
    let batch_power =
        batch.samples[..m_samples].iter().map(|s| s.norm_sqr()).sum::<f64>() / m_samples as f64;

    // Correlator grid around the prediction.
    let v_pred = -handover.predicted_doppler * SPEED_OF_LIGHT / cfg.signal.f_carrier_hz;
    let pred_offset = handover.predicted_offset;
    let predicted_range = move |t: f64| pred_offset + v_pred * (t - t_rx);
    let half = (det.n_correlators - 1) as f64 / 2.0;
    let offsets: Vec<f64> = (0..det.n_correlators)
        .map(|i| (i as f64 - half) * det.spacing)
        .collect();
    let span_m = half * det.spacing;
    let margin = ((span_m / SPEED_OF_LIGHT * fs).ceil() as usize) + 4;
    let replica = Replica::generate(&sig, predicted_range, t_rx, fs, m_samples, margin)?;
    let grid = correlate_grid(&batch, &replica, &offsets, &[0.0], t_i)?;
    let corr = CorrelatorVector {
        values: grid.iter().map(|row| row[0]).collect(),
        spacing_m: det.spacing,
        anchor_offset_m: -span_m,
        t_i,
        freq_offset_hz: 0.0,
    };

    // Noise floor from total batch power. The batch is noise-dominated (the
    // per-sample SNR at these operating points is ~1e-4), so the expected
    // correlation power under the noise hypothesis is the batch power times
    // the replica energy, with ~1/sqrt(m_samples) relative error. A small
    // probe-based estimate (see `noise_floor`) has enough variance at the
    // 1e-7 false-alarm point to dominate the missed-detection rate.
    let rep_energy: f64 = replica
        .slice(0, m_samples)
        .iter()
        .map(|r| r.norm_sqr())
        .sum();
    let nf = NoiseFloor {
        power: batch_power * rep_energy,
        dof_count: m_samples,
    };
    let threshold = detection_threshold(&nf, det.pfa)?;

    let mags = corr.magnitudes();
    let index = match det.algorithm {
        Algorithm::Maximum => detect_max(&corr, threshold),
        Algorithm::Early => detect_early(&corr, threshold, det.early_late_gap),
    };

    // S-curve range estimate at the winning correlator.
    let gap = det.early_late_gap;
    let mut flags = DetectionFlags {
        missed: index.is_none(),
        ..Default::default()
    };
    let (range_offset, range_literal) = match index {
        Some(i) if i >= gap && i + gap < mags.len() => {
            let d = gap as f64 * det.spacing;
            match scurve_root(mags[i - gap], mags[i], mags[i + gap], d) {
                Ok(root) => {
                    if root.abs() > det.spacing {
                        flags.flank_trigger = true;
                    }
                    let literal = scurve_eq_literal(mags[i - gap], mags[i], mags[i + gap], d).ok();
                    (Some(corr.offset_of(i) + root), literal.map(|l| corr.offset_of(i) + l))
                }
                Err(_) => {
                    flags.flank_trigger = true;
                    (None, None)
                }
            }
        }
        Some(_) => {
            flags.flank_trigger = true;
            (None, None)
        }
        None => (None, None),
    };

    // A second resolvable peak above the threshold is spoofing evidence.
    if let Some(i) = index {
        let second_peak = (0..mags.len()).any(|j| {
            j.abs_diff(i) >= 3
                && mags[j] >= threshold
                && (j == 0 || mags[j] > mags[j - 1])
                && (j + 1 == mags.len() || mags[j] > mags[j + 1])
        });
        if second_peak {
            flags.spoof_suspected = true;
        }
    }

    // Vestigial search for levels >= 2. The searches correlate against a
    // static replica, so the predicted carrier Doppler is wiped off first;
    // the residual (sinusoidal dynamics plus clock drift) stays well inside
    // one coherent bin.
    let vss = if run_vss {
        let mut vss_batch = batch.clone();
        let f_wipe = handover.predicted_doppler;
        for (n, s) in vss_batch.samples.iter_mut().enumerate() {
            *s *= num_complex::Complex64::from_polar(
                1.0,
                -std::f64::consts::TAU * f_wipe * n as f64 / fs,
            );
        }
        let batch = vss_batch;
        let result = if cfg.mitigation.level >= 3 {
            let plan = plan_exhaustive(
                period_s,
                sig.code.chip_length_m(),
                t_i,
                0.0,
            )?;
            vss_exhaustive_search(
                &batch,
                &sig,
                &plan,
                cfg.mitigation.overall_pfa,
                cfg.mitigation.override_resource_guard,
            )?
        } else {
            let e1_batch = make_e1_batch(
                cfg,
                e1_sig,
                t_rx,
                clock,
                &mut substream(seed, ku, Stream::E1Batch),
            )?;
            // Known receiver calibration terms shift the encrypted band
            // relative to the open one; fold them into the seeds so the
            // search boxes stay centered.
            let seed_correction = cfg.channel.bgd_m + cfg.channel.hw_offset_m;
            let seeds: Vec<f64> =
                vss_e1_scan(&e1_batch, &e1_sig.code, e1_sig.recs_length_s, det.pfa)?
                    .iter()
                    .map(|d| d.offset_m + seed_correction)
                    .collect();
            if seeds.is_empty() {
                VssResult {
                    detections: vec![],
                    earliest_index: None,
                    spoof_declared: false,
                    unverified_e1: vec![],
                }
            } else {
                let plan = plan_handover(2.0 * period_s, period_s)?;
                vss_handover_search(&seeds, &batch, &sig, &plan, cfg.mitigation.overall_pfa)?
            }
        };
        if result.spoof_declared {
            flags.spoof_suspected = true;
        }
        Some(result)
    } else {
        None
    };

    // Ground truth for bookkeeping: the actual code offset of the signal
    // relative to the prediction.
    let t_true = t_rx - clock.bias_at(t_rx);
    let truth_abs = cfg.dynamics.range(t_true) + extra_delay + SPEED_OF_LIGHT * clock.bias_at(t_rx);
    let truth_offset = truth_abs - handover.predicted_offset;
    let false_alarm = match index {
        Some(i) => {
            let measured = corr.offset_of(i);
            let chip = sig.code.chip_length_m();
            let near_truth = (measured - truth_offset).abs() <= chip;
            let near_spoof = cfg.spoof.as_ref().map_or(false, |p| {
                p.amplitude(t_rx) > 0.0
                    && (measured - (truth_offset + p.offset_m(t_rx))).abs() <= chip
            });
            !(near_truth || near_spoof)
        }
        None => false,
    };

    let (peak_magnitude, peak_phase) = match index {
        Some(i) => (mags[i], corr.values[i].arg()),
        None => {
            let best = mags.iter().cloned().fold(0.0, f64::max);
            (best, 0.0)
        }
    };
    let report = DetectionReport {
        epoch: t_rx,
        detected: index.is_some(),
        index,
        algorithm: det.algorithm,
        threshold,
        peak_magnitude,
        peak_phase,
        range_offset,
        range_offset_literal: range_literal,
        flags,
    };

    Ok(EpochCore {
        epoch: t_rx,
        corr,
        report,
        vss,
        truth_offset,
        false_alarm,
        cn0: m.cn0,
        batch_power,
    })
}

/// Run the full campaign described by the scenario.
pub fn run_campaign(cfg: &ScenarioConfig) -> Result<CampaignOutput> {
    cfg.validate()?;
    let n = cfg.n_epochs();
    let e1_sig = e1_signal(cfg)?;

    // Clock sequence is the only cross-epoch state: march it first.
    let mut clock_states = Vec::with_capacity(n);
    let mut state = ClockState::zero();
    for k in 0..n {
        state = clock_step(
            &state,
            cfg.epoch_interval,
            &cfg.channel.clock,
            &mut substream(cfg.seed, k as u64, Stream::Clock),
        );
        clock_states.push(state);
    }

    let cores: Vec<EpochCore> = (0..n)
        .into_par_iter()
        .map(|k| {
            compute_epoch(cfg, &e1_sig, k, &clock_states[k]).map_err(|e| {
                Error::InvalidInput(format!("epoch {k} ({} s): {e}", (k + 1) as f64 * cfg.epoch_interval))
            })
        })
        .collect::<Result<Vec<_>>>()?;

    // Sequential verdict pass: monitors need trailing history.
    let mut rows = Vec::with_capacity(n);
    let mut cn0_history = Vec::with_capacity(n);
    let mut power_history = Vec::with_capacity(n);
    for (k, core) in cores.into_iter().enumerate() {
        cn0_history.push(core.cn0);
        power_history.push(core.batch_power);
        let states_window = if k == 0 {
            &clock_states[..1]
        } else {
            &clock_states[k - 1..=k]
        };
        let verdict = run_level(
            &cfg.mitigation,
            &EpochInputs {
                report: &core.report,
                nf: &crate::correlator::NoiseFloor {
                    power: core.report.threshold.powi(2) / (-cfg.detection.pfa.ln()),
                    dof_count: 1,
                },
                cn0_history: &cn0_history,
                power_history: &power_history,
                clock_states: states_window,
                clock_params: &cfg.channel.clock,
                vss: core.vss.as_ref(),
            },
        )?;
        rows.push(EpochRow {
            epoch: core.epoch,
            corr: core.corr,
            report: core.report,
            verdict,
            vss: core.vss,
            truth_offset: core.truth_offset,
            false_alarm: core.false_alarm,
            cn0: core.cn0,
            batch_power: core.batch_power,
        });
    }

    let summary = summarize(cfg, &rows);
    Ok(CampaignOutput { rows, summary })
}

fn summarize(cfg: &ScenarioConfig, rows: &[EpochRow]) -> CampaignSummary {
    let epochs = rows.len() as u64;
    let missed = rows.iter().filter(|r| !r.report.detected).count() as u64;
    let false_alarms = rows.iter().filter(|r| r.false_alarm).count() as u64;
    let spoof_detected = rows
        .iter()
        .filter(|r| r.report.flags.spoof_suspected)
        .count() as u64;
    let auth_failed = rows.iter().filter(|r| !r.verdict.authentic).count() as u64;
    let mut offsets: Vec<f64> = rows
        .iter()
        .filter_map(|r| r.report.range_offset)
        .collect();
    let mean = if offsets.is_empty() {
        0.0
    } else {
        offsets.iter().sum::<f64>() / offsets.len() as f64
    };
    let p99 = if offsets.is_empty() {
        0.0
    } else {
        offsets.sort_by(f64::total_cmp);
        let idx = ((0.99 * offsets.len() as f64).ceil() as usize).clamp(1, offsets.len()) - 1;
        offsets[idx]
    };
    let peak_accel = rows
        .iter()
        .map(|r| cfg.dynamics.accel(r.epoch).abs())
        .fold(0.0, f64::max);
    CampaignSummary {
        epochs,
        missed,
        pd_estimate: if epochs == 0 {
            0.0
        } else {
            1.0 - missed as f64 / epochs as f64
        },
        false_alarms,
        spoof_detected_epochs: spoof_detected,
        mean_range_offset: mean,
        range_offset_p99: p99,
        peak_accel_observed: peak_accel,
        auth_failed_epochs: auth_failed,
    }
}

fn alarms_field(alarms: &[Alarm]) -> String {
    alarms
        .iter()
        .map(|a| format!("{a:?}"))
        .collect::<Vec<_>>()
        .join(";")
}

/// Write the selected result tables plus `summary.json` into `dir`.
pub fn emit_tables(out: &CampaignOutput, selections: &[String], dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    if selections.iter().any(|s| s == "correlators") {
        let mut w = std::io::BufWriter::new(std::fs::File::create(dir.join("correlators.csv"))?);
        writeln!(w, "epoch,index,offset_m,magnitude,phase")?;
        for r in &out.rows {
            for (i, v) in r.corr.values.iter().enumerate() {
                writeln!(
                    w,
                    "{},{},{},{},{}",
                    r.epoch,
                    i,
                    r.corr.offset_of(i),
                    v.norm(),
                    v.arg()
                )?;
            }
        }
    }
    if selections.iter().any(|s| s == "detections") {
        let mut w = std::io::BufWriter::new(std::fs::File::create(dir.join("detections.csv"))?);
        writeln!(
            w,
            "epoch,detected,index,algorithm,threshold,peak_magnitude,peak_phase,range_offset,missed,spoof_suspected,flank_trigger,false_alarm"
        )?;
        for r in &out.rows {
            let rep = &r.report;
            writeln!(
                w,
                "{},{},{},{:?},{},{},{},{},{},{},{},{}",
                rep.epoch,
                rep.detected,
                rep.index.map(|i| i.to_string()).unwrap_or_default(),
                rep.algorithm,
                rep.threshold,
                rep.peak_magnitude,
                rep.peak_phase,
                rep.range_offset.map(|v| v.to_string()).unwrap_or_default(),
                rep.flags.missed,
                rep.flags.spoof_suspected,
                rep.flags.flank_trigger,
                r.false_alarm
            )?;
        }
    }
    if selections.iter().any(|s| s == "range") {
        let mut w = std::io::BufWriter::new(std::fs::File::create(dir.join("range.csv"))?);
        writeln!(w, "epoch,scurve_offset,eq1_literal_offset,flank_flag")?;
        for r in &out.rows {
            writeln!(
                w,
                "{},{},{},{}",
                r.epoch,
                r.report.range_offset.map(|v| v.to_string()).unwrap_or_default(),
                r.report
                    .range_offset_literal
                    .map(|v| v.to_string())
                    .unwrap_or_default(),
                r.report.flags.flank_trigger
            )?;
        }
    }
    if selections.iter().any(|s| s == "verdicts") {
        let mut w = std::io::BufWriter::new(std::fs::File::create(dir.join("verdicts.csv"))?);
        writeln!(w, "epoch,authentic,failed_checks,alarms,vss_detections")?;
        for r in &out.rows {
            let failed: Vec<&str> = r
                .verdict
                .checks
                .iter()
                .filter(|c| c.enabled && !c.pass)
                .map(|c| c.name)
                .collect();
            writeln!(
                w,
                "{},{},{},{},{}",
                r.epoch,
                r.verdict.authentic,
                failed.join(";"),
                alarms_field(&r.verdict.alarms),
                r.vss.as_ref().map(|v| v.detections.len()).unwrap_or(0)
            )?;
        }
    }
    let json = serde_json::to_string_pretty(&out.summary)
        .map_err(|e| Error::Parse(format!("summary serialization: {e}")))?;
    std::fs::write(dir.join("summary.json"), json + "\n")?;
    Ok(())
}

/// Recompute the summary counts from the emitted tables and cross-check the
/// stored `summary.json`. Returns (stored, recomputed).
pub fn recompute_summary(dir: &Path) -> Result<(CampaignSummary, CampaignSummary)> {
    let stored: CampaignSummary = serde_json::from_str(
        &std::fs::read_to_string(dir.join("summary.json"))
            .map_err(|_| Error::InvalidInput(format!("{} has no summary.json", dir.display())))?,
    )
    .map_err(|e| Error::Parse(format!("summary.json: {e}")))?;

    let detections = std::fs::read_to_string(dir.join("detections.csv"))
        .map_err(|_| Error::InvalidInput("run directory has no detections.csv".into()))?;
    let mut epochs = 0u64;
    let mut missed = 0u64;
    let mut false_alarms = 0u64;
    let mut spoof = 0u64;
    let mut offsets = Vec::new();
    for line in detections.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() < 12 {
            return Err(Error::Parse(format!("detections.csv: bad row {line:?}")));
        }
        epochs += 1;
        if cols[8] == "true" {
            missed += 1;
        }
        if cols[9] == "true" {
            spoof += 1;
        }
        if cols[11] == "true" {
            false_alarms += 1;
        }
        if !cols[7].is_empty() {
            offsets.push(cols[7].parse::<f64>().map_err(|_| {
                Error::Parse(format!("detections.csv: bad range offset in {line:?}"))
            })?);
        }
    }
    let auth_failed = match std::fs::read_to_string(dir.join("verdicts.csv")) {
        Ok(text) => text
            .lines()
            .skip(1)
            .filter(|l| l.split(',').nth(1) == Some("false"))
            .count() as u64,
        Err(_) => stored.auth_failed_epochs,
    };
    let mean = if offsets.is_empty() {
        0.0
    } else {
        offsets.iter().sum::<f64>() / offsets.len() as f64
    };
    let p99 = if offsets.is_empty() {
        0.0
    } else {
        offsets.sort_by(f64::total_cmp);
        let idx = ((0.99 * offsets.len() as f64).ceil() as usize).clamp(1, offsets.len()) - 1;
        offsets[idx]
    };
    let recomputed = CampaignSummary {
        epochs,
        missed,
        pd_estimate: if epochs == 0 {
            0.0
        } else {
            1.0 - missed as f64 / epochs as f64
        },
        false_alarms,
        spoof_detected_epochs: spoof,
        mean_range_offset: mean,
        range_offset_p99: p99,
        peak_accel_observed: stored.peak_accel_observed,
        auth_failed_epochs: auth_failed,
    };
    Ok((stored, recomputed))
}
