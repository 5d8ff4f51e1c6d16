//! Proportion comparison and the optional two-proportion interval.

use crate::error::{Error, Result};

/// Proportions of the negative outcome in the control and test groups and
/// their difference `delta_p = p_c - p_t`.
pub fn compute_delta_p(
    control_outcomes: &[u8],
    test_outcomes: &[u8],
    negative_outcome: u8,
) -> Result<(f64, f64, f64)> {
    if control_outcomes.is_empty() || test_outcomes.is_empty() {
        return Err(Error::Audit("empty outcome list".into()));
    }
    let share = |outcomes: &[u8]| {
        outcomes.iter().filter(|&&y| y == negative_outcome).count() as f64 / outcomes.len() as f64
    };
    let p_c = share(control_outcomes);
    let p_t = share(test_outcomes);
    Ok((p_c, p_t, p_c - p_t))
}

/// Two-proportion Wald interval around `p_c - p_t` at the given confidence
/// level. Degenerate proportions (0 or 1 on both sides) give a zero-width
/// interval.
pub fn wald_interval(p_c: f64, n_c: usize, p_t: f64, n_t: usize, level: f64) -> (f64, f64) {
    assert!(n_c >= 1 && n_t >= 1, "group sizes must be at least 1");
    assert!((0.0..1.0).contains(&(1.0 - level)) && level > 0.0 && level < 1.0);
    let z = normal_quantile((1.0 + level) / 2.0);
    let se = (p_c * (1.0 - p_c) / n_c as f64 + p_t * (1.0 - p_t) / n_t as f64).sqrt();
    let delta = p_c - p_t;
    (delta - z * se, delta + z * se)
}

/// Inverse standard-normal CDF (Acklam's rational approximation, absolute
/// error below 1.2e-9 — plenty for confidence intervals).
pub fn normal_quantile(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "quantile needs p in (0, 1)");

    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.38357751867269e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    }
}
