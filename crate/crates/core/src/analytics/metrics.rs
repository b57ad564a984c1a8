//! Masked-position metrics: magnitude and sign accuracy, per-modulus accuracy
//! and cross-entropy, and bucketed magnitude error.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::Bucket;
use crate::featurizer::{modulus_at, residue_offset, TermTargets, NUM_MODULI};
use crate::model::PositionPrediction;

/// A magnitude prediction is a hit when `|v̂ − v| < 0.5` (strict).
pub const MAG_TOLERANCE: f64 = 0.5;

/// Fraction of positions with `|v̂ − v| < 0.5`.
pub fn mag_accuracy(pred: &[f64], target: &[f64]) -> f64 {
    assert_eq!(pred.len(), target.len());
    if pred.is_empty() {
        return 0.0;
    }
    let hits = pred.iter().zip(target).filter(|(p, t)| (*p - *t).abs() < MAG_TOLERANCE).count();
    hits as f64 / pred.len() as f64
}

/// `NIG_m = 1 − CE_m / ln m` for the moduli `2..=101`.
pub fn nig(ce_per_modulus: &[f64]) -> Vec<f64> {
    assert_eq!(ce_per_modulus.len(), NUM_MODULI);
    ce_per_modulus.iter().enumerate().map(|(i, ce)| 1.0 - ce / f64::from(modulus_at(i)).ln()).collect()
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

fn log_softmax_at(logits: &[f64], target: usize) -> f64 {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let log_z = max + logits.iter().map(|&l| (l - max).exp()).sum::<f64>().ln();
    logits[target] - log_z
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BucketStats {
    pub count: u64,
    pub sq_err: f64,
    pub mag_hits: u64,
}

/// Running sums over masked positions, reduced in insertion order.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedMetrics {
    pub count: u64,
    pub mag_hits: u64,
    pub sign_hits: u64,
    pub mod_hits: Vec<u64>,
    pub mod_ce: Vec<f64>,
    pub buckets: BTreeMap<Bucket, BucketStats>,
}

impl Default for MaskedMetrics {
    fn default() -> Self {
        Self {
            count: 0,
            mag_hits: 0,
            sign_hits: 0,
            mod_hits: vec![0; NUM_MODULI],
            mod_ce: vec![0.0; NUM_MODULI],
            buckets: BTreeMap::new(),
        }
    }
}

impl MaskedMetrics {
    pub fn add(&mut self, pred: &PositionPrediction, target: &TermTargets, bucket: Bucket) {
        self.count += 1;
        let err = pred.mu - target.v;
        let hit = err.abs() < MAG_TOLERANCE;
        self.mag_hits += u64::from(hit);
        self.sign_hits += u64::from(argmax(&pred.sign_logits) == target.sign.index());
        for (i, &r) in target.residues.iter().enumerate() {
            let m = modulus_at(i);
            let off = residue_offset(m);
            let block = &pred.residue_logits[off..off + m as usize];
            self.mod_hits[i] += u64::from(argmax(block) == r as usize);
            self.mod_ce[i] -= log_softmax_at(block, r as usize);
        }
        let b = self.buckets.entry(bucket).or_default();
        b.count += 1;
        b.sq_err += err * err;
        b.mag_hits += u64::from(hit);
    }

    pub fn merge(&mut self, other: &MaskedMetrics) {
        self.count += other.count;
        self.mag_hits += other.mag_hits;
        self.sign_hits += other.sign_hits;
        for i in 0..NUM_MODULI {
            self.mod_hits[i] += other.mod_hits[i];
            self.mod_ce[i] += other.mod_ce[i];
        }
        for (b, s) in &other.buckets {
            let e = self.buckets.entry(*b).or_default();
            e.count += s.count;
            e.sq_err += s.sq_err;
            e.mag_hits += s.mag_hits;
        }
    }

    fn frac(&self, hits: u64) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            hits as f64 / self.count as f64
        }
    }

    pub fn mag_acc(&self) -> f64 {
        self.frac(self.mag_hits)
    }

    pub fn sign_acc(&self) -> f64 {
        self.frac(self.sign_hits)
    }

    pub fn per_modulus_acc(&self) -> Vec<f64> {
        self.mod_hits.iter().map(|&h| self.frac(h)).collect()
    }

    /// Mean Modulo Accuracy: the unweighted mean of the per-modulus accuracies.
    pub fn mma(&self) -> f64 {
        mean(&self.per_modulus_acc())
    }

    pub fn per_modulus_ce(&self) -> Vec<f64> {
        let n = self.count.max(1) as f64;
        self.mod_ce.iter().map(|c| c / n).collect()
    }

    pub fn per_modulus_nig(&self) -> Vec<f64> {
        nig(&self.per_modulus_ce())
    }

    pub fn bucket_mse(&self) -> BTreeMap<Bucket, f64> {
        self.buckets.iter().map(|(b, s)| (*b, s.sq_err / s.count as f64)).collect()
    }

    pub fn bucket_counts(&self) -> BTreeMap<Bucket, u64> {
        self.buckets.iter().map(|(b, s)| (*b, s.count)).collect()
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}
