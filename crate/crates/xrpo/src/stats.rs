//! Confidence statistics over reward samples.
//!
//! The Student-t quantile is implemented from scratch (Lanczos ln-gamma,
//! regularized incomplete beta via a Lentz continued fraction, and a
//! Newton/bisection inversion) so the numeric kernel carries no external
//! dependency. On top of it sit the confidence half-width of a mean-reward
//! estimate and the expected half-width reduction from one more sample.

use serde::{Deserialize, Serialize};

use crate::error::{Result, XrpoError};

use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;

/// A sample of scalar rewards for one prompt, with cached moments.
///
/// The cached mean and standard deviation are recomputed from the raw
/// values on every push, so they always agree with a fresh pass over
/// `values()`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<f64>", into = "Vec<f64>")]
pub struct RewardSample {
    values: Vec<f64>,
    mean: f64,
    std: f64,
}

impl RewardSample {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_values(values: Vec<f64>) -> Self {
        let mut s = Self {
            values,
            mean: 0.0,
            std: 0.0,
        };
        s.recompute();
        s
    }

    pub fn push(&mut self, value: f64) {
        self.values.push(value);
        self.recompute();
    }

    pub fn n(&self) -> u32 {
        self.values.len() as u32
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Sample standard deviation (n-1 denominator); 0.0 when n < 2.
    pub fn std(&self) -> f64 {
        self.std
    }

    fn recompute(&mut self) {
        let n = self.values.len();
        if n == 0 {
            self.mean = 0.0;
            self.std = 0.0;
            return;
        }
        let mean = self.values.iter().sum::<f64>() / n as f64;
        self.mean = mean;
        if n < 2 {
            self.std = 0.0;
            return;
        }
        let ss = self.values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
        self.std = (ss / (n as f64 - 1.0)).sqrt();
    }
}

impl From<Vec<f64>> for RewardSample {
    fn from(values: Vec<f64>) -> Self {
        Self::from_values(values)
    }
}

impl From<RewardSample> for Vec<f64> {
    fn from(s: RewardSample) -> Self {
        s.values
    }
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection; valid for x in (0, 0.5) where sin(pi x) > 0.
        PI.ln() - (PI * x).sin().ln() - ln_gamma(1.0 - x)
    } else {
        let x = x - 1.0;
        let mut acc = LANCZOS[0];
        for (i, c) in LANCZOS.iter().enumerate().skip(1) {
            acc += c / (x + i as f64);
        }
        let t = x + LANCZOS_G + 0.5;
        0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
    }
}

/// Continued fraction for the incomplete beta (modified Lentz).
fn betacf(a: f64, b: f64, x: f64) -> f64 {
    const MAX_ITER: usize = 400;
    const EPS: f64 = 1e-16;
    const FPMIN: f64 = 1e-300;

    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < FPMIN {
        d = FPMIN;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = 1.0 + aa / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = 1.0 + aa / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta I_x(a, b) for a, b > 0 and x in [0, 1].
fn inc_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front =
        ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    // Use the continued fraction on the side where it converges fast.
    if x < (a + 1.0) / (a + b + 2.0) {
        front * betacf(a, b, x) / a
    } else {
        1.0 - front * betacf(b, a, 1.0 - x) / b
    }
}

fn t_cdf(x: f64, df: u32) -> f64 {
    let v = df as f64;
    let ib = inc_beta(0.5 * v, 0.5, v / (v + x * x));
    if x >= 0.0 {
        1.0 - 0.5 * ib
    } else {
        0.5 * ib
    }
}

fn t_pdf(x: f64, df: u32) -> f64 {
    let v = df as f64;
    let ln = ln_gamma(0.5 * (v + 1.0))
        - ln_gamma(0.5 * v)
        - 0.5 * (v * PI).ln()
        - 0.5 * (v + 1.0) * (x * x / v).ln_1p();
    ln.exp()
}

thread_local! {
    // The allocator asks for the same few (p, df) pairs over and over,
    // one per prompt per round, so inversions are memoized per thread.
    static T_QUANTILE_MEMO: RefCell<HashMap<(u64, u32), f64>> = RefCell::new(HashMap::new());
}

const T_QUANTILE_MEMO_CAP: usize = 1 << 16;

/// Quantile of the Student-t distribution with `df` degrees of freedom.
///
/// Inverts the CDF (regularized incomplete beta) with a bracketed
/// Newton/bisection hybrid. Errors if `p` is outside (0, 1) or `df` is 0.
pub fn t_quantile(p: f64, df: u32) -> Result<f64> {
    if df < 1 {
        return Err(XrpoError::Domain("t_quantile: df must be >= 1".into()));
    }
    if !p.is_finite() || p <= 0.0 || p >= 1.0 {
        return Err(XrpoError::Domain(format!(
            "t_quantile: p must lie in (0, 1), got {p}"
        )));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    if p < 0.5 {
        return Ok(-t_quantile(1.0 - p, df)?);
    }
    let key = (p.to_bits(), df);
    if let Some(hit) = T_QUANTILE_MEMO.with(|m| m.borrow().get(&key).copied()) {
        return Ok(hit);
    }
    let x = invert_t_cdf(p, df)?;
    T_QUANTILE_MEMO.with(|m| {
        let mut m = m.borrow_mut();
        if m.len() >= T_QUANTILE_MEMO_CAP {
            m.clear();
        }
        m.insert(key, x);
    });
    Ok(x)
}

fn invert_t_cdf(p: f64, df: u32) -> Result<f64> {
    // Bracket the root, then refine with Newton steps that fall back to
    // bisection whenever they leave the bracket.
    let mut lo = 0.0_f64;
    let mut hi = 1.0_f64;
    while t_cdf(hi, df) < p {
        lo = hi;
        hi *= 2.0;
        if hi > 1e15 {
            return Err(XrpoError::Domain(format!(
                "t_quantile: failed to bracket p = {p} at df = {df}"
            )));
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let f = t_cdf(x, df) - p;
        if f > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let slope = t_pdf(x, df);
        let mut next = if slope > 0.0 { x - f / slope } else { 0.5 * (lo + hi) };
        if !next.is_finite() || next <= lo || next >= hi {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 1e-13 * (1.0 + x.abs()) {
            return Ok(next);
        }
        x = next;
    }
    Ok(x)
}

/// Two-sided confidence half-width of a mean estimate from `n` samples
/// with sample standard deviation `s` at level `1 - alpha`.
///
/// Computed as `s * (t_{1-alpha/2, n-1} / sqrt(n))`; scaling `s` by a
/// power of two therefore scales the result exactly.
pub fn half_width(s: f64, n: u32, alpha: f64) -> Result<f64> {
    if n < 2 {
        return Err(XrpoError::Domain(format!(
            "half_width: need n >= 2 samples, got {n}"
        )));
    }
    if !s.is_finite() || s < 0.0 {
        return Err(XrpoError::Domain(format!(
            "half_width: s must be finite and >= 0, got {s}"
        )));
    }
    if !alpha.is_finite() || alpha <= 0.0 || alpha >= 1.0 {
        return Err(XrpoError::Domain(format!(
            "half_width: alpha must lie in (0, 1), got {alpha}"
        )));
    }
    let t = t_quantile(1.0 - alpha / 2.0, n - 1)?;
    Ok(s * (t / (n as f64).sqrt()))
}

/// Expected reduction in confidence half-width from drawing one more
/// sample, assuming the standard deviation estimate stays fixed.
///
/// Defined as `half_width(s, n, alpha) - half_width(s, n + 1, alpha)`,
/// which is positive for every `s > 0` and `n >= 2`.
pub fn uncertainty_reduction(s: f64, n: u32, alpha: f64) -> Result<f64> {
    Ok(half_width(s, n, alpha)? - half_width(s, n + 1, alpha)?)
}
