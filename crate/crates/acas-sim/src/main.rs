use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use acas_sim::batchfile::read_batch;
use acas_sim::campaign::{emit_tables, recompute_summary, run_campaign};
use acas_sim::correlator::{correlate_grid, noise_floor, CorrelatorVector, Replica};
use acas_sim::detector::theory::{
    detection_threshold, plan_exhaustive, plan_handover, prob_detection, required_cn0,
    single_event_pfa,
};
use acas_sim::detector::{detect_early, detect_max, Algorithm};
use acas_sim::error::{Error, Result};
use acas_sim::rng::{substream, Stream};
use acas_sim::scenario::load_scenario;
use acas_sim::SPEED_OF_LIGHT;

/// Encrypted-signal authentication simulator: signal generation, handover
/// acquisition, spoofing detection, and mitigation campaigns.
#[derive(Parser)]
#[command(name = "acas-sim", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum DetectorArg {
    Max,
    Early,
}

#[derive(Subcommand)]
enum Command {
    /// Print the acquisition search-space arithmetic for a scenario.
    Plan {
        /// Bundled scenario name or path to a scenario file.
        scenario: String,
        /// Assumed time uncertainty for the exhaustive plan, s.
        #[arg(long, default_value_t = 30.0)]
        delta_t: f64,
        /// Doppler uncertainty span for the exhaustive plan, Hz.
        #[arg(long, default_value_t = 10_000.0)]
        doppler_span: f64,
    },
    /// Run a full campaign and write result tables.
    Run {
        scenario: String,
        /// Output directory for tables and summary.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Override the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the number of epochs.
        #[arg(long)]
        epochs: Option<usize>,
        /// Override the detection algorithm.
        #[arg(long, value_enum)]
        detector: Option<DetectorArg>,
        /// Override the mitigation level (1..=3).
        #[arg(long)]
        level: Option<u8>,
        /// Allow level-3 exhaustive searches past the time-uncertainty
        /// resource guard.
        #[arg(long)]
        override_resource_guard: bool,
    },
    /// Run detection on a recorded sample batch.
    Detect {
        /// Sample batch file written by a previous run.
        batch: PathBuf,
        /// Scenario providing signal, channel, and detector parameters.
        scenario: String,
        #[arg(long, value_enum)]
        detector: Option<DetectorArg>,
        /// Epoch index used to key the spreading code.
        #[arg(long, default_value_t = 0)]
        epoch: u64,
    },
    /// Recompute the summary from a run directory and cross-check it.
    Report {
        /// Directory produced by `run`.
        dir: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help / --version are successful exits; everything else is a
            // usage error.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e @ (Error::InvalidConfig { .. } | Error::InvalidInput(_) | Error::Parse(_))) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cmd: Command) -> Result<ExitCode> {
    match cmd {
        Command::Plan {
            scenario,
            delta_t,
            doppler_span,
        } => cmd_plan(&scenario, delta_t, doppler_span),
        Command::Run {
            scenario,
            out,
            seed,
            epochs,
            detector,
            level,
            override_resource_guard,
        } => cmd_run(
            &scenario,
            &out,
            seed,
            epochs,
            detector,
            level,
            override_resource_guard,
        ),
        Command::Detect {
            batch,
            scenario,
            detector,
            epoch,
        } => cmd_detect(&batch, &scenario, detector, epoch),
        Command::Report { dir } => cmd_report(&dir),
    }
}

fn cmd_plan(scenario: &str, delta_t: f64, doppler_span: f64) -> Result<ExitCode> {
    let cfg = load_scenario(scenario)?;
    let sig = cfg.signal.signal_for_epoch(0)?;
    let t_i = cfg.signal.recs_length_s;
    let chip_m = sig.code.chip_length_m();
    let exhaustive = plan_exhaustive(delta_t, chip_m, t_i, doppler_span)?;
    let handover = plan_handover(delta_t, sig.code.period_s())?;

    println!("scenario: {scenario}");
    println!("snapshot length: {} ms, chip length: {:.3} m", t_i * 1e3, chip_m);
    println!();
    println!("exhaustive search over delta_t = {delta_t} s:");
    println!("  code offsets:   {}", exhaustive.n_code_offsets);
    println!(
        "  doppler bins:   {} ({} Hz each over +/- {} Hz)",
        exhaustive.n_doppler_bins,
        exhaustive.doppler_bin_width,
        doppler_span / 2.0
    );
    println!("  total cells:    {:.4e}", exhaustive.n_total as f64);
    println!();
    println!("handover search over the same delta_t:");
    println!("  code offsets:   {}", handover.n_code_offsets);
    println!(
        "  reduction:      {:.3e}x",
        exhaustive.n_total as f64 / handover.n_total as f64
    );
    println!();
    let pfa = cfg.detection.pfa;
    let per_cell = single_event_pfa(pfa, exhaustive.n_total)?;
    println!("detection at overall false-alarm probability {pfa:e}:");
    println!("  exhaustive per-cell pfa:  {per_cell:.4e}");
    println!(
        "  required C/N0 for Pd 0.99, handover:   {:.2} dB-Hz",
        required_cn0(pfa, 0.99, t_i)?
    );
    println!(
        "  required C/N0 for Pd 0.99, exhaustive: {:.2} dB-Hz",
        required_cn0(per_cell, 0.99, t_i)?
    );
    if let Some(cn0) = cfg.channel.cn0_dbhz {
        println!(
            "  Pd at scenario C/N0 {cn0} dB-Hz (handover): {:.6}",
            prob_detection(cn0, t_i, pfa)?
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_run(
    scenario: &str,
    out: &std::path::Path,
    seed: Option<u64>,
    epochs: Option<usize>,
    detector: Option<DetectorArg>,
    level: Option<u8>,
    override_resource_guard: bool,
) -> Result<ExitCode> {
    let mut cfg = load_scenario(scenario)?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    if let Some(epochs) = epochs {
        cfg.duration = epochs as f64 * cfg.epoch_interval;
    }
    if let Some(detector) = detector {
        cfg.detection.algorithm = match detector {
            DetectorArg::Max => Algorithm::Maximum,
            DetectorArg::Early => Algorithm::Early,
        };
    }
    if let Some(level) = level {
        cfg.mitigation.level = level;
    }
    if override_resource_guard {
        cfg.mitigation.override_resource_guard = true;
    }
    cfg.validate()?;

    let output = run_campaign(&cfg)?;
    emit_tables(&output, &cfg.outputs, out)?;
    let s = &output.summary;
    println!(
        "{} epochs: {} missed (Pd {:.4}), {} false alarms, {} spoof-flagged, {} non-authentic",
        s.epochs, s.missed, s.pd_estimate, s.false_alarms, s.spoof_detected_epochs,
        s.auth_failed_epochs
    );
    println!(
        "range offset: mean {:.3} m, p99 {:.3} m; peak accel {:.2} m/s^2",
        s.mean_range_offset, s.range_offset_p99, s.peak_accel_observed
    );
    println!("tables written to {}", out.display());

    let failed_fraction = s.auth_failed_epochs as f64 / s.epochs.max(1) as f64;
    if failed_fraction > cfg.auth_failure_budget {
        eprintln!(
            "authentication failure: {:.4} of epochs non-authentic exceeds budget {}",
            failed_fraction, cfg.auth_failure_budget
        );
        return Ok(ExitCode::from(3));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_detect(
    batch_path: &std::path::Path,
    scenario: &str,
    detector: Option<DetectorArg>,
    epoch: u64,
) -> Result<ExitCode> {
    let cfg = load_scenario(scenario)?;
    let batch = read_batch(batch_path)?;
    let det = &cfg.detection;
    let algorithm = match detector {
        Some(DetectorArg::Max) => Algorithm::Maximum,
        Some(DetectorArg::Early) => Algorithm::Early,
        None => det.algorithm,
    };
    let sig = cfg.signal.signal_for_epoch(epoch)?;
    let t_i = cfg.signal.recs_length_s;
    let m = (t_i * batch.fs).round() as usize;
    if batch.len() < m {
        return Err(Error::BatchTooShort {
            needed: m,
            have: batch.len(),
        });
    }

    let dynamics = cfg.dynamics;
    let predicted = move |t: f64| dynamics.range(t);
    let half = (det.n_correlators - 1) as f64 / 2.0;
    let offsets: Vec<f64> = (0..det.n_correlators)
        .map(|i| (i as f64 - half) * det.spacing)
        .collect();
    let margin = ((half * det.spacing / SPEED_OF_LIGHT * batch.fs).ceil() as usize) + 4;
    let replica = Replica::generate(&sig, predicted, batch.t_start, batch.fs, m, margin)?;
    let grid = correlate_grid(&batch, &replica, &offsets, &[0.0], t_i)?;
    let corr = CorrelatorVector {
        values: grid.iter().map(|row| row[0]).collect(),
        spacing_m: det.spacing,
        anchor_offset_m: -half * det.spacing,
        t_i,
        freq_offset_hz: 0.0,
    };
    let bogus = cfg.signal.bogus_signal_for_epoch(epoch)?;
    let bogus_replica = Replica::generate(&bogus, predicted, batch.t_start, batch.fs, m, 64)?;
    let nf = noise_floor(
        &batch,
        &bogus_replica,
        t_i,
        8,
        &mut substream(cfg.seed, epoch, Stream::NoiseFloor),
    )?;
    let threshold = detection_threshold(&nf, det.pfa)?;
    let index = match algorithm {
        Algorithm::Maximum => detect_max(&corr, threshold),
        Algorithm::Early => detect_early(&corr, threshold, det.early_late_gap),
    };

    let mags = corr.magnitudes();
    println!("threshold: {threshold:.4}");
    for (i, mag) in mags.iter().enumerate() {
        let marker = match index {
            Some(w) if w == i => "  <- detected",
            _ => "",
        };
        println!("{:>10.3} m  {:>12.4}{}", corr.offset_of(i), mag, marker);
    }
    match index {
        Some(i) => {
            println!("detected at offset {:.3} m", corr.offset_of(i));
            Ok(ExitCode::SUCCESS)
        }
        None => {
            println!("no detection");
            Ok(ExitCode::from(2))
        }
    }
}

fn cmd_report(dir: &std::path::Path) -> Result<ExitCode> {
    let (stored, recomputed) = recompute_summary(dir)?;
    let json = serde_json::to_string_pretty(&recomputed)
        .map_err(|e| Error::Parse(format!("summary serialization: {e}")))?;
    println!("{json}");
    let consistent = stored.epochs == recomputed.epochs
        && stored.missed == recomputed.missed
        && stored.false_alarms == recomputed.false_alarms
        && stored.spoof_detected_epochs == recomputed.spoof_detected_epochs
        && stored.auth_failed_epochs == recomputed.auth_failed_epochs
        && (stored.mean_range_offset - recomputed.mean_range_offset).abs() < 1e-9
        && (stored.range_offset_p99 - recomputed.range_offset_p99).abs() < 1e-9;
    if !consistent {
        eprintln!("stored summary.json disagrees with the emitted tables");
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}
