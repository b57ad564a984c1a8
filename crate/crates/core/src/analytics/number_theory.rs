//! Euler's totient ratio and Pearson correlation with a t-test p-value.

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

/// Distinct prime factors of `m` in ascending order, by trial division.
pub fn prime_factors(mut m: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= m {
        if m.is_multiple_of(p) {
            out.push(p);
            while m.is_multiple_of(p) {
                m /= p;
            }
        }
        p += 1;
    }
    if m > 1 {
        out.push(m);
    }
    out
}

/// `φ(m) = m Π_{p | m} (1 − 1/p)`.
pub fn euler_phi(m: u64) -> u64 {
    prime_factors(m).into_iter().fold(m, |acc, p| acc / p * (p - 1))
}

/// `φ(m)/m` as an exact reduced fraction.
///
/// # Panics
/// If `m < 2`.
pub fn totient_ratio(m: u64) -> Ratio<u64> {
    assert!(m >= 2, "totient ratio is defined here for m >= 2");
    prime_factors(m).into_iter().fold(Ratio::from_integer(1), |acc, p| acc * Ratio::new(p - 1, p))
}

pub fn ratio_to_f64(r: Ratio<u64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

#[derive(Debug, Error, PartialEq)]
pub enum CorrelationError {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("zero variance")]
    ZeroVariance,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub r: f64,
    pub n: usize,
    /// `t = r √((n − 2)/(1 − r²))`.
    pub t: f64,
    /// Two-sided p-value from a Student t distribution with `n − 2` degrees
    /// of freedom.
    pub p_value: f64,
}

/// Sample Pearson correlation with its two-sided p-value.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<Correlation, CorrelationError> {
    if xs.len() != ys.len() {
        return Err(CorrelationError::LengthMismatch(xs.len(), ys.len()));
    }
    let n = xs.len();
    if n < 3 {
        return Err(CorrelationError::TooFewPoints(n));
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(CorrelationError::ZeroVariance);
    }
    let r = (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0);
    let df = (n - 2) as f64;
    let denom = 1.0 - r * r;
    let t = if denom <= 0.0 { f64::INFINITY.copysign(r) } else { r * (df / denom).sqrt() };
    let p_value = if t.is_infinite() {
        0.0
    } else {
        let dist = StudentsT::new(0.0, 1.0, df).expect("df >= 1");
        (2.0 * dist.sf(t.abs())).min(1.0)
    };
    Ok(Correlation { r, n, t, p_value })
}
