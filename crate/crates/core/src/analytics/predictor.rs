//! Anything that produces prediction bundles at masked positions.

use rand::Rng;

use crate::featurizer::{residue_offset, MaskedSample, RESIDUE_LOGITS, NUM_MODULI, modulus_at};
use crate::model::{Model, PositionPrediction, Real};
use crate::rng::{self, Purpose};

/// Logit given to the non-target classes of a one-hot stub; `exp` of it
/// underflows to zero so the target gets probability exactly one.
const OFF_LOGIT: f64 = -1e4;

pub trait Predictor: Sync {
    /// Predictions at the masked positions of each sample, in position order.
    /// `key` identifies the batch so stochastic predictors stay reproducible
    /// when batches are processed out of order.
    fn predict(&self, samples: &[MaskedSample], key: u64) -> Vec<Vec<PositionPrediction>>;
}

impl<T: Real> Predictor for Model<T> {
    fn predict(&self, samples: &[MaskedSample], _key: u64) -> Vec<Vec<PositionPrediction>> {
        Model::predict(self, samples)
    }
}

/// Reads the answers off the targets.
#[derive(Debug, Clone, Copy)]
pub struct PerfectPredictor {
    pub log_var: f64,
}

impl Default for PerfectPredictor {
    fn default() -> Self {
        Self { log_var: 2.0 * 0.1f64.ln() }
    }
}

impl Predictor for PerfectPredictor {
    fn predict(&self, samples: &[MaskedSample], _key: u64) -> Vec<Vec<PositionPrediction>> {
        samples
            .iter()
            .map(|s| {
                s.masked_positions()
                    .map(|i| {
                        let t = &s.targets()[i];
                        let mut sign_logits = [OFF_LOGIT; 3];
                        sign_logits[t.sign.index()] = 0.0;
                        let mut residue_logits = vec![OFF_LOGIT; RESIDUE_LOGITS];
                        for (k, &r) in t.residues.iter().enumerate() {
                            residue_logits[residue_offset(modulus_at(k)) + r as usize] = 0.0;
                        }
                        PositionPrediction { mu: t.v, log_var: self.log_var, sign_logits, residue_logits }
                    })
                    .collect()
            })
            .collect()
    }
}

/// Near-uniform distributions whose argmax is uniformly random.
///
/// Logits are `ε · u` with `u ~ U(0, 1)`, so cross-entropy is `ln m` up to
/// `ε` while ties are broken at random rather than towards class zero.
#[derive(Debug, Clone, Copy)]
pub struct UniformPredictor {
    pub seed: u64,
    pub mu: f64,
}

impl UniformPredictor {
    const EPS: f64 = 1e-9;

    pub fn new(seed: u64) -> Self {
        Self { seed, mu: 0.0 }
    }
}

impl Predictor for UniformPredictor {
    fn predict(&self, samples: &[MaskedSample], key: u64) -> Vec<Vec<PositionPrediction>> {
        let mut rng = rng::stream(self.seed, Purpose::EvalMask, u64::MAX, key);
        samples
            .iter()
            .map(|s| {
                s.masked_positions()
                    .map(|_| {
                        let mut noise = |n: usize| -> Vec<f64> { (0..n).map(|_| Self::EPS * rng.random::<f64>()).collect() };
                        let sign = noise(3);
                        PositionPrediction {
                            mu: self.mu,
                            log_var: 0.0,
                            sign_logits: [sign[0], sign[1], sign[2]],
                            residue_logits: noise(RESIDUE_LOGITS),
                        }
                    })
                    .collect()
            })
            .collect()
    }
}

/// `Σ_{m=2}^{101} (1/m) / 100`, the expected MMA of a uniform random guesser.
pub fn chance_mma() -> f64 {
    (0..NUM_MODULI).map(|i| 1.0 / f64::from(modulus_at(i))).sum::<f64>() / NUM_MODULI as f64
}
