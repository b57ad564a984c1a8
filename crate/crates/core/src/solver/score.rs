//! Candidate scoring: `α_mag + 0.3 · α_mod` with
//! `α_mag = −(v(x) − μ)² / (2 max(σ², 10⁻⁴))` and
//! `α_mod = Σ_m ln max(P_m(x mod m), 10⁻¹²)`.

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive};

use super::SolverQuery;
use crate::featurizer::{magnitude_value, magnitude_value_u64, modulus_at, residues, NUM_MODULI};

pub const MOD_WEIGHT: f64 = 0.3;
pub const VARIANCE_FLOOR: f64 = 1e-4;
pub const PROB_FLOOR: f64 = 1e-12;

/// Precomputed log-probability tables of one query.
#[derive(Debug, Clone)]
pub struct Scorer {
    pub mu: f64,
    /// `2 · max(σ², 10⁻⁴)`.
    two_var: f64,
    /// `ln max(P_m(r), 10⁻¹²)` per modulus index and residue.
    pub log_probs: Vec<Vec<f64>>,
}

impl Scorer {
    pub fn new(query: &SolverQuery) -> Self {
        let var = query.log_var.exp().max(VARIANCE_FLOOR);
        let log_probs = query
            .residue_probs
            .iter()
            .map(|dist| dist.iter().map(|&p| p.max(PROB_FLOOR).ln()).collect())
            .collect();
        Self { mu: query.mu, two_var: 2.0 * var, log_probs }
    }

    #[inline]
    pub fn magnitude_term(&self, v: f64) -> f64 {
        let d = v - self.mu;
        -(d * d) / self.two_var
    }

    /// `α_mod` for a residue vector; summed in modulus order.
    #[inline]
    pub fn modulo_term(&self, res: &[u32]) -> f64 {
        let mut acc = 0.0;
        for (table, &r) in self.log_probs.iter().zip(res) {
            acc += table[r as usize];
        }
        acc
    }

    #[inline]
    pub fn combine(&self, v: f64, modulo_term: f64) -> f64 {
        self.magnitude_term(v) + MOD_WEIGHT * modulo_term
    }

    /// Score of a signed candidate.
    pub fn score(&self, x: &BigInt) -> f64 {
        if let Some(n) = x.abs().to_u64() {
            let negative = x.is_negative();
            let mut res = [0u32; NUM_MODULI];
            for (i, r) in res.iter_mut().enumerate() {
                let m = u64::from(modulus_at(i));
                let a = (n % m) as u32;
                *r = if negative && a != 0 { m as u32 - a } else { a };
            }
            return self.combine(magnitude_value_u64(n), self.modulo_term(&res));
        }
        let res = residues(x).map(u32::from);
        self.combine(magnitude_value(x), self.modulo_term(&res))
    }
}

/// Convenience wrapper building a [`Scorer`] for a single evaluation.
pub fn score_candidate(x: &BigInt, query: &SolverQuery) -> f64 {
    Scorer::new(query).score(x)
}
