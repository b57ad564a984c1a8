//! Per-term input features, supervision targets and masking.
//!
//! Each integer `x` is described by
//! - magnitude features `[v, 1[x>0], 1[x<0], 1[x=0]]` with `v = 1 + log10|x|`
//!   (`v = 0` for zero),
//! - modulo features: for every modulus `m` in `2..=101`, the residue
//!   `r = x mod m` placed on the unit circle as `(sin 2πr/m, cos 2πr/m)`.

use std::f64::consts::PI;
use std::ops::RangeInclusive;
use std::sync::Arc;

use num_bigint::{BigInt, Sign};
use num_traits::{ToPrimitive, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// The modulus range of the modulo stream.
pub const MODULI: RangeInclusive<u32> = 2..=101;
pub const NUM_MODULI: usize = 100;
pub const MAG_FEATURES: usize = 4;
pub const MOD_FEATURES: usize = 2 * NUM_MODULI;
/// Total width of the residue logit block: `sum(m for m in 2..=101)`.
pub const RESIDUE_LOGITS: usize = 5150;

/// Beyond this many decimal digits `v` is the digit count instead of
/// `1 + log10|x|`.
pub const DIGIT_FALLBACK: usize = 300;

/// Offset of modulus `m` inside the concatenated residue logit block.
pub const fn residue_offset(m: u32) -> usize {
    let m = m as usize;
    m * (m - 1) / 2 - 1
}

pub fn modulus_at(index: usize) -> u32 {
    *MODULI.start() + index as u32
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SignClass {
    Positive = 0,
    Negative = 1,
    Zero = 2,
}

impl SignClass {
    pub fn of(x: &BigInt) -> Self {
        match x.sign() {
            Sign::Plus => SignClass::Positive,
            Sign::Minus => SignClass::Negative,
            Sign::NoSign => SignClass::Zero,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Self {
        match i {
            0 => SignClass::Positive,
            1 => SignClass::Negative,
            _ => SignClass::Zero,
        }
    }
}

/// Number of decimal digits of `|x|` (1 for zero).
pub fn decimal_digits(x: &BigInt) -> usize {
    if let Some(v) = x.to_i128() {
        return v.unsigned_abs().checked_ilog10().map_or(1, |d| d as usize + 1);
    }
    x.magnitude().to_str_radix(10).len()
}

/// `v = 0` for zero, otherwise `1 + log10|x|`, falling back to the digit count
/// for integers with more than [`DIGIT_FALLBACK`] digits.
pub fn magnitude_value(x: &BigInt) -> f64 {
    if x.is_zero() {
        return 0.0;
    }
    if x.bits() > 990 {
        let digits = decimal_digits(x);
        if digits > DIGIT_FALLBACK {
            return digits as f64;
        }
    }
    let abs = x.magnitude().to_f64().expect("below f64 overflow");
    1.0 + abs.log10()
}

/// Same value as [`magnitude_value`] for a machine integer.
pub fn magnitude_value_u64(n: u64) -> f64 {
    if n == 0 {
        0.0
    } else {
        1.0 + (n as f64).log10()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MagnitudeFeatures {
    pub v: f64,
    pub sign_onehot: [f64; 3],
}

impl MagnitudeFeatures {
    pub fn to_array(&self) -> [f64; MAG_FEATURES] {
        [self.v, self.sign_onehot[0], self.sign_onehot[1], self.sign_onehot[2]]
    }
}

pub fn magnitude_features(x: &BigInt) -> MagnitudeFeatures {
    let mut sign_onehot = [0.0; 3];
    sign_onehot[SignClass::of(x).index()] = 1.0;
    MagnitudeFeatures { v: magnitude_value(x), sign_onehot }
}

/// Nonnegative residue `x mod m`.
pub fn residue(x: &BigInt, m: u32) -> u32 {
    assert!(m >= 1);
    if let Some(v) = x.to_i64() {
        return v.rem_euclid(i64::from(m)) as u32;
    }
    let r = (x.magnitude() % m).to_u32().expect("residue < m");
    if x.sign() == Sign::Minus && r != 0 {
        m - r
    } else {
        r
    }
}

/// Residues for every modulus in [`MODULI`], in ascending modulus order.
pub fn residues(x: &BigInt) -> [u8; NUM_MODULI] {
    let mut out = [0u8; NUM_MODULI];
    for (slot, m) in out.iter_mut().zip(MODULI) {
        *slot = residue(x, m) as u8;
    }
    out
}

/// `(sin 2πr/m, cos 2πr/m)`.
pub fn unit_circle(r: u32, m: u32) -> [f64; 2] {
    let angle = 2.0 * PI * f64::from(r) / f64::from(m);
    [angle.sin(), angle.cos()]
}

/// 200 values: for `m = 2..=101` ascending, sine then cosine.
pub fn modulo_features(x: &BigInt) -> Vec<f64> {
    features_from_residues(&residues(x))
}

pub fn features_from_residues(res: &[u8; NUM_MODULI]) -> Vec<f64> {
    let mut out = Vec::with_capacity(MOD_FEATURES);
    for (&r, m) in res.iter().zip(MODULI) {
        out.extend_from_slice(&unit_circle(u32::from(r), m));
    }
    out
}

/// Supervision targets of one term.
#[derive(Debug, Clone, PartialEq)]
pub struct TermTargets {
    pub v: f64,
    pub sign: SignClass,
    pub residues: [u8; NUM_MODULI],
}

impl TermTargets {
    pub fn of(x: &BigInt) -> Self {
        Self { v: magnitude_value(x), sign: SignClass::of(x), residues: residues(x) }
    }
}

/// A sequence prefix with precomputed features, targets and vocabulary ids.
#[derive(Debug, Clone)]
pub struct EncodedSequence {
    pub terms: Vec<BigInt>,
    pub mag: Vec<[f64; MAG_FEATURES]>,
    pub modulo: Vec<Vec<f64>>,
    pub targets: Vec<TermTargets>,
    pub tokens: Vec<u32>,
}

impl EncodedSequence {
    pub fn new(terms: &[BigInt]) -> Self {
        let targets: Vec<TermTargets> = terms.iter().map(TermTargets::of).collect();
        let mag = terms.iter().map(|t| magnitude_features(t).to_array()).collect();
        let modulo = targets.iter().map(|t| features_from_residues(&t.residues)).collect();
        let tokens = terms.iter().map(crate::model::token_id).collect();
        Self { terms: terms.to_vec(), mag, modulo, targets, tokens }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

/// An encoded sequence together with its mask flags.
///
/// Features of masked positions are kept (targets are computed from them) but
/// the model replaces their embedding with its learned mask embedding.
#[derive(Debug, Clone)]
pub struct MaskedSample {
    pub encoded: Arc<EncodedSequence>,
    pub mask: Vec<bool>,
}

impl MaskedSample {
    pub fn len(&self) -> usize {
        self.mask.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mask.is_empty()
    }

    pub fn masked_positions(&self) -> impl Iterator<Item = usize> + '_ {
        self.mask.iter().enumerate().filter(|(_, &m)| m).map(|(i, _)| i)
    }

    pub fn masked_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn targets(&self) -> &[TermTargets] {
        &self.encoded.targets
    }

    /// Only the final position masked.
    pub fn last_masked(encoded: Arc<EncodedSequence>) -> Self {
        let n = encoded.len();
        let mask = (0..n).map(|i| i + 1 == n).collect();
        Self { encoded, mask }
    }

    pub fn with_mask(encoded: Arc<EncodedSequence>, mask: Vec<bool>) -> Self {
        assert_eq!(encoded.len(), mask.len());
        Self { encoded, mask }
    }
}

/// Bernoulli(p) mask per position; if nothing got masked one uniformly chosen
/// position is forced.
pub fn draw_mask(len: usize, p: f64, rng: &mut impl Rng) -> Vec<bool> {
    assert!(len >= 1, "cannot mask an empty sequence");
    let mut mask: Vec<bool> = (0..len).map(|_| rng.random::<f64>() < p).collect();
    if !mask.iter().any(|&m| m) {
        mask[rng.random_range(0..len)] = true;
    }
    mask
}

pub fn mask_encoded(encoded: Arc<EncodedSequence>, p: f64, rng: &mut impl Rng) -> MaskedSample {
    let mask = draw_mask(encoded.len(), p, rng);
    MaskedSample { encoded, mask }
}

/// Encodes `terms` and draws a mask.
///
/// # Panics
/// If `terms` is empty or longer than the model context.
pub fn mask_sample(terms: &[BigInt], p: f64, rng: &mut impl Rng) -> MaskedSample {
    assert!(
        (1..=crate::corpus::MAX_PREFIX).contains(&terms.len()),
        "sample length must be in 1..={}",
        crate::corpus::MAX_PREFIX
    );
    mask_encoded(Arc::new(EncodedSequence::new(terms)), p, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Purpose};
    use num_traits::{One, Signed};
    use proptest::prelude::*;

    fn big(s: &str) -> BigInt {
        s.parse().unwrap()
    }

    /// Square-and-multiply `base^exp mod m` over u64; independent of BigInt.
    fn pow_mod(base: u64, mut exp: u64, m: u64) -> u64 {
        let mut acc = 1 % m;
        let mut b = base % m;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc * b % m;
            }
            b = b * b % m;
            exp >>= 1;
        }
        acc
    }

    #[test]
    fn offsets_and_widths() {
        assert_eq!(residue_offset(2), 0);
        assert_eq!(residue_offset(3), 2);
        assert_eq!(residue_offset(101) + 101, RESIDUE_LOGITS);
        assert_eq!(MODULI.map(|m| m as usize).sum::<usize>(), RESIDUE_LOGITS);
        assert_eq!(MODULI.count(), NUM_MODULI);
    }

    #[test]
    fn magnitude_examples() {
        assert_eq!(magnitude_value(&BigInt::zero()), 0.0);
        assert_eq!(magnitude_value(&BigInt::from(100)), 3.0);
        assert_eq!(magnitude_value(&BigInt::one()), 1.0);
        let x = BigInt::from(10u32).pow(399) * 3;
        assert_eq!(decimal_digits(&x), 400);
        assert_eq!(magnitude_value(&x), 400.0);
    }

    #[test]
    fn magnitude_feature_examples() {
        let f = magnitude_features(&BigInt::from(-5));
        assert!((f.v - (1.0 + 5f64.log10())).abs() < 1e-12);
        assert!((f.v - 1.699).abs() < 1e-3);
        assert_eq!(f.sign_onehot, [0.0, 1.0, 0.0]);
        let f = magnitude_features(&BigInt::zero());
        assert_eq!(f.to_array(), [0.0, 0.0, 0.0, 1.0]);
        let f = magnitude_features(&BigInt::one());
        assert_eq!(f.to_array(), [1.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn residue_examples() {
        assert_eq!(residue(&BigInt::from(-7), 3), 2);
        assert_eq!(residue(&BigInt::from(7), 3), 1);
        let x = BigInt::from(10u32).pow(100);
        assert_eq!(u64::from(residue(&x, 97)), pow_mod(10, 100, 97));
        assert_eq!(u64::from(residue(&-x.clone(), 97)), (97 - pow_mod(10, 100, 97)) % 97);
    }

    #[test]
    fn modulo_feature_examples() {
        let f = modulo_features(&BigInt::zero());
        assert_eq!(f.len(), 200);
        for pair in f.chunks(2) {
            assert_eq!(pair, [0.0, 1.0]);
        }
        let f = modulo_features(&BigInt::from(7));
        // m = 3 is the second modulus
        let expect = [(2.0 * PI / 3.0).sin(), (2.0 * PI / 3.0).cos()];
        assert_eq!(&f[2..4], &expect);
    }

    #[test]
    fn masking_rules() {
        let terms: Vec<BigInt> = (0..10).map(BigInt::from).collect();
        let s = mask_sample(&terms, 0.0, &mut stream(1, Purpose::TrainMask, 0, 0));
        assert_eq!(s.masked_count(), 1);
        let s = mask_sample(&terms, 1.0, &mut stream(1, Purpose::TrainMask, 0, 0));
        assert_eq!(s.masked_count(), 10);
        let a = mask_sample(&terms, 0.15, &mut stream(9, Purpose::TrainMask, 3, 4));
        let b = mask_sample(&terms, 0.15, &mut stream(9, Purpose::TrainMask, 3, 4));
        assert_eq!(a.mask, b.mask);
    }

    #[test]
    fn mask_rate_is_close_to_p() {
        let mut rng = stream(5, Purpose::TrainMask, 0, 0);
        let total: usize = (0..2000).map(|_| draw_mask(100, 0.15, &mut rng).iter().filter(|&&m| m).count()).sum();
        let rate = total as f64 / 200_000.0;
        assert!((rate - 0.15).abs() < 0.005, "{rate}");
    }

    fn lcm_2_to_101() -> BigInt {
        use num_integer::Integer;
        MODULI.fold(BigInt::one(), |acc, m| acc.lcm(&BigInt::from(m)))
    }

    proptest! {
        #[test]
        fn unit_circle_norm(digits in "-?[1-9][0-9]{0,120}") {
            let f = modulo_features(&big(&digits));
            for pair in f.chunks(2) {
                prop_assert!((pair[0] * pair[0] + pair[1] * pair[1] - 1.0).abs() < 1e-9);
            }
        }

        #[test]
        fn lcm_shift_invariance(digits in "-?[1-9][0-9]{0,40}", k in -5i64..5) {
            let x = big(&digits);
            let shifted = &x + lcm_2_to_101() * k;
            prop_assert_eq!(modulo_features(&x), modulo_features(&shifted));
        }

        #[test]
        fn crt_consistency(digits in "-?[1-9][0-9]{0,80}") {
            let r = residues(&big(&digits));
            let at = |m: usize| r[m - 2];
            prop_assert_eq!(at(6) % 2, at(2));
            prop_assert_eq!(at(6) % 3, at(3));
            prop_assert_eq!(at(100) % 4, at(4));
            prop_assert_eq!(at(100) % 25, at(25));
        }

        #[test]
        fn magnitude_round_trip(x in 1i64..=1_000_000_000_000_000) {
            let v = magnitude_value(&BigInt::from(x));
            let back = 10f64.powf(v - 1.0);
            prop_assert!((back - x as f64).abs() / (x as f64) < 1e-10);
        }

        #[test]
        fn magnitude_monotone(a in "[1-9][0-9]{0,330}", b in "[1-9][0-9]{0,330}") {
            let (a, b) = (big(&a), big(&b));
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(magnitude_value(&lo) <= magnitude_value(&hi));
            prop_assert_eq!(magnitude_value(&-hi.clone()), magnitude_value(&hi));
        }

        #[test]
        fn residue_matches_mod_floor(digits in "-?[0-9]{1,60}", m in 2u32..=101) {
            use num_integer::Integer;
            let x = big(&digits);
            let expect = x.mod_floor(&BigInt::from(m));
            prop_assert_eq!(BigInt::from(residue(&x, m)), expect);
            prop_assert!(!BigInt::from(residue(&x, m)).is_negative());
        }

        #[test]
        fn u64_magnitude_agrees(n in 1u64..u64::MAX) {
            prop_assert_eq!(magnitude_value_u64(n), magnitude_value(&BigInt::from(n)));
        }
    }

    #[test]
    fn monotone_across_digit_fallback() {
        let just_below = BigInt::from(10u32).pow(300) - 1;
        let at = BigInt::from(10u32).pow(300);
        assert!(magnitude_value(&just_below) <= magnitude_value(&at));
        assert_eq!(magnitude_value(&at), 301.0);
        assert!(magnitude_value(&(BigInt::from(10u32).pow(299) * 9)) < 301.0);
    }
}
