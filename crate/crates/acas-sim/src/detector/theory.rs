//! Envelope-detection theory: thresholds, Pd/Pfa relations, and hypothesis
//! budgeting for the acquisition searches.
//!
//! Model: single coherent dwell, magnitude test on a complex Gaussian.
//! Under H0 the magnitude is Rayleigh, under H1 Rician, so
//! Pd = Q1(sqrt(2·C/N0·T_I), sqrt(-2·ln Pfa)) with Q1 the first-order
//! Marcum function.

use crate::correlator::NoiseFloor;
use crate::error::{Error, Result};

/// Hypothesis-count budget for an acquisition search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchPlan {
    /// Initial time uncertainty covered, s.
    pub delta_t: f64,
    pub n_code_offsets: u64,
    pub n_doppler_bins: u64,
    /// Frequency bin width 1/(2 T_I), Hz.
    pub doppler_bin_width: f64,
    pub n_total: u64,
    pub mode: SearchMode,
    /// Code-period stride between hypotheses in handover mode, s.
    pub e1_period: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchMode {
    Exhaustive,
    Handover,
}

/// Detection threshold on correlation magnitude for a desired single-event
/// false alarm probability, given the measured noise power.
pub fn detection_threshold(nf: &NoiseFloor, pfa: f64) -> Result<f64> {
    if !(pfa > 0.0 && pfa < 1.0) {
        return Err(Error::InvalidInput(format!(
            "false alarm probability must be in (0, 1), got {pfa}"
        )));
    }
    Ok((-nf.power * pfa.ln()).sqrt())
}

/// ln I0(x), modified Bessel function of order zero, valid for all x >= 0.
fn ln_i0(x: f64) -> f64 {
    // Abramowitz & Stegun 9.8.1 / 9.8.2 rational fits, |error| < 2e-7.
    if x < 3.75 {
        let t = (x / 3.75).powi(2);
        (1.0
            + t * (3.5156229
                + t * (3.0899424
                    + t * (1.2067492 + t * (0.2659732 + t * (0.0360768 + t * 0.0045813))))))
            .ln()
    } else {
        let t = 3.75 / x;
        x - 0.5 * x.ln()
            + (0.39894228
                + t * (0.01328592
                    + t * (0.00225319
                        + t * (-0.00157565
                            + t * (0.00916281
                                + t * (-0.02057706
                                    + t * (0.02635537 + t * (-0.01647633 + t * 0.00392377))))))))
                .ln()
    }
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Core Marcum series, valid when a <= b:
/// Q1(a,b) = sum_k Pois(k; a²/2) · P(Pois(b²/2) <= k), evaluated in the log
/// domain so large noncentralities do not underflow.
fn marcum_q1_small(a: f64, b: f64) -> f64 {
    let x = 0.5 * a * a;
    let y = 0.5 * b * b;
    if x == 0.0 {
        return (-y).exp();
    }
    let ln_x = x.ln();
    let ln_y = y.ln();
    let k_max = (x + 40.0 * x.sqrt() + 60.0).ceil() as usize;
    let mut total = 0.0;
    // ln Pois(k; x) and ln Pois(k; y), advanced in lockstep with k.
    let mut lp = -x;
    let mut ly = -y;
    let mut ln_cdf = ly;
    for k in 0..=k_max {
        total += (lp + ln_cdf.min(0.0)).exp();
        let k1 = (k + 1) as f64;
        lp += ln_x - k1.ln();
        ly += ln_y - k1.ln();
        ln_cdf = log_add_exp(ln_cdf, ly);
    }
    total.clamp(0.0, 1.0)
}

/// First-order Marcum Q function Q1(a, b).
pub fn marcum_q1(a: f64, b: f64) -> f64 {
    assert!(a >= 0.0 && b >= 0.0, "Marcum Q arguments must be nonnegative");
    if b == 0.0 {
        return 1.0;
    }
    if a <= b {
        marcum_q1_small(a, b)
    } else {
        // Q1(a,b) + Q1(b,a) = 1 + exp(-(a²+b²)/2)·I0(ab)
        let cross = (ln_i0(a * b) - 0.5 * (a * a + b * b)).exp();
        (1.0 - marcum_q1_small(b, a) + cross).clamp(0.0, 1.0)
    }
}

/// Probability of detecting a signal at the given carrier-to-noise density
/// with one coherent dwell of length `t_i` at single-event false alarm
/// probability `pfa`.
pub fn prob_detection(cn0_dbhz: f64, t_i: f64, pfa: f64) -> Result<f64> {
    if !(pfa > 0.0 && pfa < 1.0) || !(t_i > 0.0) || !cn0_dbhz.is_finite() {
        return Err(Error::InvalidInput(format!(
            "invalid detection operating point: cn0 {cn0_dbhz} dB-Hz, t_i {t_i} s, pfa {pfa}"
        )));
    }
    let cn0_lin = 10f64.powf(cn0_dbhz / 10.0);
    let a = (2.0 * cn0_lin * t_i).sqrt();
    let b = (-2.0 * pfa.ln()).sqrt();
    Ok(marcum_q1(a, b))
}

/// Carrier-to-noise density required to reach detection probability `pd`,
/// inverted by bisection to 0.01 dB.
pub fn required_cn0(pfa: f64, pd: f64, t_i: f64) -> Result<f64> {
    if !(pfa > 0.0 && pfa < pd && pd < 1.0) {
        return Err(Error::InvalidInput(format!(
            "need 0 < pfa < pd < 1, got pfa {pfa}, pd {pd}"
        )));
    }
    let mut lo = -20.0;
    let mut hi = 90.0;
    if prob_detection(lo, t_i, pfa)? > pd || prob_detection(hi, t_i, pfa)? < pd {
        return Err(Error::Estimation(format!(
            "required C/N0 outside [{lo}, {hi}] dB-Hz bracket"
        )));
    }
    for _ in 0..50 {
        let mid = 0.5 * (lo + hi);
        if prob_detection(mid, t_i, pfa)? < pd {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Single-event false alarm probability that yields `overall_pfa` across `n`
/// independent hypotheses: 1 - (1 - P)^(1/n), in log space for large n.
pub fn single_event_pfa(overall_pfa: f64, n: u64) -> Result<f64> {
    if !(overall_pfa > 0.0 && overall_pfa < 1.0) || n == 0 {
        return Err(Error::InvalidInput(format!(
            "need overall pfa in (0, 1) and n >= 1, got {overall_pfa}, {n}"
        )));
    }
    Ok(-((-overall_pfa).ln_1p() / n as f64).exp_m1())
}

/// Hypothesis budget for a blind search over the full time uncertainty at
/// half-chip code stepping.
pub fn plan_exhaustive(
    delta_t: f64,
    chip_len_m: f64,
    t_i: f64,
    doppler_span_hz: f64,
) -> Result<SearchPlan> {
    if !(delta_t > 0.0 && chip_len_m > 0.0 && t_i > 0.0 && doppler_span_hz >= 0.0) {
        return Err(Error::InvalidInput("search plan arguments must be positive".into()));
    }
    let chip_time = chip_len_m / crate::SPEED_OF_LIGHT;
    let n_code_offsets = ceil_with_tolerance(2.0 * delta_t / chip_time);
    let doppler_bin_width = 1.0 / (2.0 * t_i);
    let n_doppler_bins = ceil_with_tolerance(2.0 * doppler_span_hz / doppler_bin_width).max(1);
    Ok(SearchPlan {
        delta_t,
        n_code_offsets,
        n_doppler_bins,
        doppler_bin_width,
        n_total: n_code_offsets * n_doppler_bins,
        mode: SearchMode::Exhaustive,
        e1_period: 0.0,
    })
}

/// Hypothesis budget when the code phase is known modulo one E1 period:
/// one hypothesis per period across the time uncertainty, single Doppler bin.
pub fn plan_handover(delta_t: f64, e1_period: f64) -> Result<SearchPlan> {
    if !(delta_t > 0.0 && e1_period > 0.0) {
        return Err(Error::InvalidInput("search plan arguments must be positive".into()));
    }
    let n = ceil_with_tolerance(delta_t / e1_period);
    Ok(SearchPlan {
        delta_t,
        n_code_offsets: n,
        n_doppler_bins: 1,
        doppler_bin_width: 0.0,
        n_total: n,
        mode: SearchMode::Handover,
        e1_period,
    })
}

/// Ceiling that forgives float representation error: ratios within 1e-6
/// relative of an integer round to it instead of ceiling up.
fn ceil_with_tolerance(x: f64) -> u64 {
    let nearest = x.round();
    if (x - nearest).abs() <= 1e-6 * nearest.abs().max(1.0) {
        nearest as u64
    } else {
        x.ceil() as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn nf(power: f64) -> NoiseFloor {
        NoiseFloor { power, dof_count: 64 }
    }

    #[test]
    fn threshold_analytic_points() {
        let t = detection_threshold(&nf(2.0), (-1.0f64).exp()).unwrap();
        assert_relative_eq!(t, 2f64.sqrt(), max_relative = 1e-12);
        let t = detection_threshold(&nf(2.0), 1e-7).unwrap();
        assert_relative_eq!(t, (2.0 * 1e7f64.ln()).sqrt(), max_relative = 1e-12);
        assert_relative_eq!(t, 5.67769, max_relative = 1e-5);
    }

    #[test]
    fn threshold_rejects_bad_pfa() {
        assert!(detection_threshold(&nf(2.0), 0.0).is_err());
        assert!(detection_threshold(&nf(2.0), 1.0).is_err());
        assert!(detection_threshold(&nf(2.0), -0.5).is_err());
    }

    #[test]
    fn marcum_q_reference_values() {
        // Frozen from an independent evaluation of the noncentral chi-square
        // survival function (ncx2.sf(b², 2, a²)).
        assert_relative_eq!(marcum_q1(1.0, 2.0), 0.26901206003591, max_relative = 1e-6);
        assert_relative_eq!(marcum_q1(2.0, 1.0), 0.9181076963694061, max_relative = 1e-6);
        assert_relative_eq!(marcum_q1(0.0, 2.0), (-2.0f64).exp(), max_relative = 1e-9);
        assert_relative_eq!(marcum_q1(5.0, 5.0), 0.5400983867737185, max_relative = 1e-6);
        assert_relative_eq!(marcum_q1(10.0, 4.0), 0.9999999993866212, max_relative = 1e-8);
    }

    #[test]
    fn marcum_q_complement_identity() {
        for &(a, b) in &[(0.5, 3.0), (2.0, 2.5), (4.0, 1.0), (8.0, 7.0)] {
            let lhs = marcum_q1(a, b) + marcum_q1(b, a);
            let rhs = 1.0 + (ln_i0(a * b) - 0.5 * (a * a + b * b)).exp();
            assert_relative_eq!(lhs, rhs, max_relative = 1e-7);
        }
    }

    #[test]
    fn pd_operating_points() {
        // 90% at 40.12 dB-Hz, 4 ms, pfa 4.16e-14.
        let pd = prob_detection(40.12, 0.004, 4.16e-14).unwrap();
        assert!((pd - 0.90).abs() < 0.01, "pd = {pd}");
        assert_relative_eq!(pd, 0.8994, max_relative = 2e-3);
        // 99.9995% at 35 dB-Hz, 16 ms, pfa 1e-7.
        let pd = prob_detection(35.0, 0.016, 1e-7).unwrap();
        assert!((pd - 0.999995).abs() < 1e-5, "pd = {pd}");
        // 99.96% at 34 dB-Hz.
        let pd = prob_detection(34.0, 0.016, 1e-7).unwrap();
        assert!((pd - 0.9996).abs() < 2e-4, "pd = {pd}");
    }

    #[test]
    fn required_cn0_operating_points() {
        let c = required_cn0(4.16e-14, 0.9, 0.004).unwrap();
        assert!((c - 40.12).abs() < 0.05, "cn0 = {c}");
        let c = required_cn0(2.08e-14, 0.9, 0.008).unwrap();
        assert!((c - 37.2).abs() < 0.1, "cn0 = {c}");
        let c = required_cn0(1.33e-7, 0.9, 0.004).unwrap();
        assert!((c - 37.66).abs() < 0.05, "cn0 = {c}");
    }

    #[test]
    fn required_cn0_consistent_with_pd() {
        let c = required_cn0(1e-7, 0.95, 0.016).unwrap();
        let pd = prob_detection(c, 0.016, 1e-7).unwrap();
        assert!((pd - 0.95).abs() < 1e-3, "round trip pd = {pd}");
    }

    #[test]
    fn single_event_pfa_values() {
        let p = single_event_pfa(1e-3, 24_000_000_000).unwrap();
        assert_relative_eq!(p, 4.16e-14, max_relative = 0.01);
        let p = single_event_pfa(0.37, 1).unwrap();
        assert_relative_eq!(p, 0.37, max_relative = 1e-15);
        let p = single_event_pfa(1e-3, 7500).unwrap();
        assert_relative_eq!(p, 1.33e-7, max_relative = 0.01);
    }

    #[test]
    fn single_event_pfa_round_trip_is_stable() {
        for &n in &[1u64, 7, 7500, 1_000_000, 24_000_000_000, 1_000_000_000_000] {
            for &big_p in &[1e-3, 0.05, 0.5] {
                let p = single_event_pfa(big_p, n).unwrap();
                let back = -((-p).ln_1p() * n as f64).exp_m1();
                assert_relative_eq!(back, big_p, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn exhaustive_plan_worked_example() {
        let plan = plan_exhaustive(30.0, 60.0, 0.004, 5000.0).unwrap();
        assert_eq!(plan.n_code_offsets, 299_792_458);
        assert_eq!(plan.n_doppler_bins, 80);
        assert_relative_eq!(plan.doppler_bin_width, 125.0, max_relative = 1e-12);
        assert_relative_eq!(plan.n_total as f64, 2.4e10, max_relative = 0.01);

        let doubled = plan_exhaustive(30.0, 60.0, 0.008, 5000.0).unwrap();
        assert_eq!(doubled.n_total, 2 * plan.n_total);

        let small = plan_exhaustive(0.001, 60.0, 0.004, 0.0).unwrap();
        assert_eq!(small.n_doppler_bins, 1);
        assert_eq!(small.n_code_offsets, 9_994);
        // At half-chip resolution in code phase the count is 2ΔT/chip_time.
        assert_relative_eq!(
            small.n_code_offsets as f64,
            2.0 * 0.001 * crate::SPEED_OF_LIGHT / 60.0,
            max_relative = 1e-4
        );
    }

    #[test]
    fn handover_plan_worked_example() {
        let plan = plan_handover(30.0, 0.004).unwrap();
        assert_eq!(plan.n_total, 7500);
        assert_eq!(plan.n_doppler_bins, 1);
        assert_eq!(plan_handover(0.004, 0.004).unwrap().n_total, 1);

        let exhaustive = plan_exhaustive(30.0, 60.0, 0.004, 5000.0).unwrap();
        let ratio = exhaustive.n_total as f64 / plan.n_total as f64;
        assert_relative_eq!(ratio, 3.2e6, max_relative = 0.01);
        assert!(plan.n_total <= exhaustive.n_total / 1_000_000);
    }

    #[test]
    fn pd_monotonicity() {
        let mut prev = 0.0;
        for cn0 in 20..50 {
            let pd = prob_detection(cn0 as f64, 0.004, 1e-7).unwrap();
            assert!(pd >= prev, "pd not monotone in cn0 at {cn0}");
            prev = pd;
        }
        let short = prob_detection(35.0, 0.002, 1e-7).unwrap();
        let long = prob_detection(35.0, 0.008, 1e-7).unwrap();
        assert!(long > short);
        let loose = prob_detection(33.0, 0.004, 1e-5).unwrap();
        let tight = prob_detection(33.0, 0.004, 1e-9).unwrap();
        assert!(loose > tight);
    }

    #[test]
    fn plan_rejects_nonpositive() {
        assert!(plan_exhaustive(0.0, 60.0, 0.004, 5000.0).is_err());
        assert!(plan_exhaustive(30.0, -60.0, 0.004, 5000.0).is_err());
        assert!(plan_handover(30.0, 0.0).is_err());
    }
}
