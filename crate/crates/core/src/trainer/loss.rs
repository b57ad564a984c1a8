//! Multi-task loss at masked positions.
//!
//! `L = w_mag · Huber(μ − v) + w_sign · CE_sign + w_mod · (1/100) Σ_m CE_m / ln m`
//! with default weights `(1, 1, 2)`. Every term is a mean over masked positions.

use serde::{Deserialize, Serialize};

use crate::featurizer::{modulus_at, residue_offset, SignClass, TermTargets, NUM_MODULI};
use crate::model::{PredictionGrads, Predictions, Real};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub mag: f64,
    pub sign: f64,
    pub modulo: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self { mag: 1.0, sign: 1.0, modulo: 2.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub total: f64,
    pub mag: f64,
    pub sign: f64,
    #[serde(rename = "mod")]
    pub modulo: f64,
    pub masked_count: usize,
}

impl LossBreakdown {
    pub fn is_finite(&self) -> bool {
        self.total.is_finite() && self.mag.is_finite() && self.sign.is_finite() && self.modulo.is_finite()
    }
}

/// Per-position loss sums; normalised into a [`LossBreakdown`] once the
/// masked count of the whole (accumulated) batch is known.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossSums {
    pub mag: f64,
    pub sign: f64,
    pub modulo: f64,
    pub count: usize,
}

impl LossSums {
    pub fn add(&mut self, other: &LossSums) {
        self.mag += other.mag;
        self.sign += other.sign;
        self.modulo += other.modulo;
        self.count += other.count;
    }

    pub fn breakdown(&self, w: &LossWeights) -> LossBreakdown {
        let n = self.count.max(1) as f64;
        let (mag, sign, modulo) = (self.mag / n, self.sign / n, self.modulo / n);
        LossBreakdown { total: w.mag * mag + w.sign * sign + w.modulo * modulo, mag, sign, modulo, masked_count: self.count }
    }
}

pub fn huber(err: f64, delta: f64) -> f64 {
    let a = err.abs();
    if a <= delta {
        0.5 * err * err
    } else {
        delta * (a - 0.5 * delta)
    }
}

pub fn huber_grad(err: f64, delta: f64) -> f64 {
    err.clamp(-delta, delta)
}

/// Cross-entropy `−ln softmax(logits)[target]` and the softmax itself.
pub fn cross_entropy(logits: &[f64], target: usize) -> (f64, Vec<f64>) {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = logits.iter().map(|&l| (l - max).exp()).sum();
    let log_z = max + sum.ln();
    let probs = logits.iter().map(|&l| (l - log_z).exp()).collect();
    (log_z - logits[target], probs)
}

/// Mean Huber loss of `μ − v`.
///
/// # Panics
/// If there are no positions.
pub fn magnitude_loss(mu: &[f64], v: &[f64], delta: f64) -> f64 {
    assert!(!mu.is_empty(), "magnitude loss needs at least one masked position");
    assert_eq!(mu.len(), v.len());
    mu.iter().zip(v).map(|(&m, &t)| huber(m - t, delta)).sum::<f64>() / mu.len() as f64
}

pub fn sign_loss(logits: &[[f64; 3]], classes: &[SignClass]) -> f64 {
    assert!(!logits.is_empty());
    assert_eq!(logits.len(), classes.len());
    logits.iter().zip(classes).map(|(l, c)| cross_entropy(l, c.index()).0).sum::<f64>() / logits.len() as f64
}

/// Per-position modulo loss `(1/100) Σ_m CE_m / ln m` for one 5150-wide row.
pub fn modulo_loss_row(logits: &[f64], residues: &[u8; NUM_MODULI]) -> f64 {
    let mut acc = 0.0;
    for (i, &r) in residues.iter().enumerate() {
        let m = modulus_at(i);
        let off = residue_offset(m);
        let (ce, _) = cross_entropy(&logits[off..off + m as usize], r as usize);
        acc += ce / f64::from(m).ln();
    }
    acc / NUM_MODULI as f64
}

/// `(1/100) Σ_m mean(CE_m) / ln m` over positions.
pub fn modulo_loss(logits: &[Vec<f64>], residues: &[[u8; NUM_MODULI]]) -> f64 {
    assert!(!logits.is_empty());
    assert_eq!(logits.len(), residues.len());
    logits.iter().zip(residues).map(|(l, r)| modulo_loss_row(l, r)).sum::<f64>() / logits.len() as f64
}

/// Loss sums over the rows of `pred` and, when `grad_scale` is given, the
/// gradient of `grad_scale · (weighted sum)` with respect to the head outputs.
///
/// `targets[k]` is the target of prediction row `k`; rows are masked positions.
pub fn masked_loss<T: Real>(
    pred: &Predictions<T>,
    targets: &[&TermTargets],
    weights: &LossWeights,
    huber_delta: f64,
    grad_scale: Option<f64>,
) -> (LossSums, Option<PredictionGrads<T>>) {
    assert_eq!(pred.rows(), targets.len());
    let rows = targets.len();
    let mut sums = LossSums { count: rows, ..LossSums::default() };
    let mut grads = grad_scale.map(|_| Predictions::<T>::zeros(rows));
    let scale = grad_scale.unwrap_or(0.0);
    let f = |x: T| x.to_f64().unwrap_or(f64::NAN);
    let mut logits = Vec::new();
    for (k, t) in targets.iter().enumerate() {
        let err = f(pred.mag[[k, 0]]) - t.v;
        sums.mag += huber(err, huber_delta);

        let sign_logits = [f(pred.sign[[k, 0]]), f(pred.sign[[k, 1]]), f(pred.sign[[k, 2]])];
        let (ce, sign_p) = cross_entropy(&sign_logits, t.sign.index());
        sums.sign += ce;

        let res_row = pred.residues.row(k);
        let mut mod_acc = 0.0;
        for (i, &r) in t.residues.iter().enumerate() {
            let m = modulus_at(i);
            let off = residue_offset(m);
            logits.clear();
            logits.extend(res_row.iter().skip(off).take(m as usize).map(|&x| f(x)));
            let (ce, probs) = cross_entropy(&logits, r as usize);
            let ln_m = f64::from(m).ln();
            mod_acc += ce / ln_m;
            if let Some(g) = grads.as_mut() {
                let c = scale * weights.modulo / (ln_m * NUM_MODULI as f64);
                for (j, &p) in probs.iter().enumerate() {
                    let y = if j == r as usize { 1.0 } else { 0.0 };
                    g.residues[[k, off + j]] = T::of(c * (p - y));
                }
            }
        }
        sums.modulo += mod_acc / NUM_MODULI as f64;

        if let Some(g) = grads.as_mut() {
            g.mag[[k, 0]] = T::of(scale * weights.mag * huber_grad(err, huber_delta));
            for (j, &p) in sign_p.iter().enumerate() {
                let y = if j == t.sign.index() { 1.0 } else { 0.0 };
                g.sign[[k, j]] = T::of(scale * weights.sign * (p - y));
            }
        }
    }
    (sums, grads)
}

/// Shorthand for loss-only evaluation.
pub fn masked_loss_sums<T: Real>(
    pred: &Predictions<T>,
    targets: &[&TermTargets],
    weights: &LossWeights,
    huber_delta: f64,
) -> LossSums {
    masked_loss(pred, targets, weights, huber_delta, None).0
}
