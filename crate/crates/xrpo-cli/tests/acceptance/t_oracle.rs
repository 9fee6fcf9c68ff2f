//! Independent Student-t quantile oracle for the acceptance suite.
//!
//! Deliberately avoids the library's route (log-gamma plus a regularized
//! incomplete beta). The substitution x = sqrt(v) tan(theta) turns the t
//! density into cos^(v-1)(theta) on (-pi/2, pi/2), so the CDF is a ratio
//! of two cosine-power integrals. Those are evaluated with adaptive
//! Simpson quadrature and the quantile is recovered by bisection.

use std::f64::consts::FRAC_PI_2;

fn integrand(df: u32, theta: f64) -> f64 {
    theta.cos().powi(df as i32 - 1)
}

fn simpson(df: u32, a: f64, b: f64) -> f64 {
    let m = 0.5 * (a + b);
    (integrand(df, a) + 4.0 * integrand(df, m) + integrand(df, b)) * (b - a) / 6.0
}

fn adaptive(df: u32, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let left = simpson(df, a, m);
    let right = simpson(df, m, b);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        adaptive(df, a, m, left, 0.5 * tol, depth - 1)
            + adaptive(df, m, b, right, 0.5 * tol, depth - 1)
    }
}

fn integral(df: u32, a: f64, b: f64) -> f64 {
    adaptive(df, a, b, simpson(df, a, b), 1e-14, 52)
}

/// Half the total mass in theta coordinates: integral of cos^(v-1) over
/// [0, pi/2].
fn half_norm(df: u32) -> f64 {
    integral(df, 0.0, FRAC_PI_2)
}

fn cdf_with_norm(df: u32, x: f64, half: f64) -> f64 {
    let theta = (x / (df as f64).sqrt()).atan();
    0.5 + 0.5 * integral(df, 0.0, theta.abs()).copysign(theta) / half
}

/// Student-t CDF at `x` with `df` degrees of freedom.
pub fn t_cdf(df: u32, x: f64) -> f64 {
    cdf_with_norm(df, x, half_norm(df))
}

/// Quantile for p in (0.5, 1): bisection on the integral-based CDF.
pub fn t_quantile(df: u32, p: f64) -> f64 {
    assert!(df >= 1);
    assert!(p > 0.5 && p < 1.0, "oracle expects an upper-tail p");
    let half = half_norm(df);
    let mut hi = 1.0;
    while cdf_with_norm(df, hi, half) < p {
        hi *= 2.0;
        assert!(hi < 1e9, "quantile bracket failed for df {df}, p {p}");
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= 1e-10 * (1.0 + mid) {
            break;
        }
        if cdf_with_norm(df, mid, half) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Closed forms for one and two degrees of freedom, used to check the
/// oracle itself before it judges the library.
pub fn closed_form(df: u32, p: f64) -> Option<f64> {
    let q = 2.0 * p - 1.0;
    match df {
        1 => Some((std::f64::consts::PI * (p - 0.5)).tan()),
        2 => Some(q * (2.0 / (1.0 - q * q)).sqrt()),
        _ => None,
    }
}
