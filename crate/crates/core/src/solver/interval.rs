//! The 3σ search interval in magnitude space and mode dispatch.

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::{SolverError, SolverMode};

/// Widest interval enumerated exhaustively.
pub const DENSE_MAX_WIDTH: u64 = 1_000_000;
/// Widest interval handled by anchored lattice enumeration.
pub const SIEVE_MAX_WIDTH: u64 = 100_000_000_000_000;
/// Largest supported exponent `hi − 1` of the interval's upper end.
pub const MAX_DIGITS: f64 = 1e6;

/// `[n_min, n_max]` over absolute values; both ends inclusive.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchInterval {
    #[serde(with = "crate::solver::decimal")]
    pub n_min: BigInt,
    #[serde(with = "crate::solver::decimal")]
    pub n_max: BigInt,
}

impl SearchInterval {
    pub fn new(n_min: BigInt, n_max: BigInt) -> Self {
        Self { n_min, n_max }
    }

    pub fn width(&self) -> BigInt {
        &self.n_max - &self.n_min
    }

    pub fn contains(&self, n: &BigInt) -> bool {
        &self.n_min <= n && n <= &self.n_max
    }
}

/// Decimal significand used once the exponent is too large for a direct `f64`
/// power: `10^y ≈ ⌊10^(y−k) · 10^15⌋ · 10^(k−15)`.
const DIRECT_LIMIT: f64 = 15.0;

fn pow10_with(y: f64, round: fn(f64) -> f64) -> BigInt {
    if y < DIRECT_LIMIT {
        return BigInt::from(round(10f64.powf(y)) as u64);
    }
    let k = y.floor();
    let significand = round(10f64.powf(y - k) * 1e15) as u64;
    BigInt::from(significand) * BigInt::from(10u32).pow((k as u32) - 15)
}

/// `⌊10^y⌋` for `y ≥ 0`, `0` for negative `y`.
pub fn pow10_floor(y: f64) -> BigInt {
    if y < 0.0 {
        return BigInt::zero();
    }
    pow10_with(y, f64::floor)
}

/// `⌈10^y⌉` for `y ≥ 0`, `1` for negative `y` in `(−∞, 0)`.
pub fn pow10_ceil(y: f64) -> BigInt {
    if y <= 0.0 {
        return BigInt::one();
    }
    pow10_with(y, f64::ceil)
}

/// Nearest integer to `10^y`.
pub fn pow10_round(y: f64) -> BigInt {
    if y < 0.0 {
        return BigInt::from(u32::from(y > -std::f64::consts::LOG10_2));
    }
    pow10_with(y, f64::round)
}

/// Interval of absolute values whose magnitude lies in `[μ − 3σ, μ + 3σ]`,
/// with the lower end clamped to 1. `None` when it contains no integer.
pub fn sigma_interval(mu: f64, log_var: f64) -> Result<Option<SearchInterval>, SolverError> {
    if !mu.is_finite() || !log_var.is_finite() {
        return Err(SolverError::InvalidQuery(format!("non-finite magnitude ({mu}, {log_var})")));
    }
    let sigma = (log_var / 2.0).exp();
    let lo = (mu - 3.0 * sigma).max(1.0);
    let hi = mu + 3.0 * sigma;
    if hi - 1.0 > MAX_DIGITS {
        return Err(SolverError::IntervalTooLarge { exponent: hi - 1.0 });
    }
    if hi < lo {
        return Ok(None);
    }
    let n_min = pow10_ceil(lo - 1.0).max(BigInt::one());
    let n_max = pow10_floor(hi - 1.0);
    Ok((n_min <= n_max).then(|| SearchInterval::new(n_min, n_max)))
}

/// Dense for `Δn ≤ 10⁶`, Sieve for `Δn ≤ 10¹⁴`, CRT beyond.
pub fn select_mode(width: &BigInt) -> SolverMode {
    match width.to_u64() {
        Some(w) if w <= DENSE_MAX_WIDTH => SolverMode::Dense,
        Some(w) if w <= SIEVE_MAX_WIDTH => SolverMode::Sieve,
        _ if width.sign() == num_bigint::Sign::Minus => SolverMode::Dense,
        _ => SolverMode::Crt,
    }
}
