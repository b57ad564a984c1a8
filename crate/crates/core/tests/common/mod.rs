//! Helpers shared by the integration tests.
#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;

use intseq::featurizer::{EncodedSequence, MaskedSample};
use intseq::model::{Mode, Model, ModelConfig, PackedBatch, ParamStore, Variant};
use intseq::trainer::{masked_loss, masked_loss_sums, row_targets, LossWeights};
use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join("data")
}

pub fn big(xs: &[i64]) -> Vec<BigInt> {
    xs.iter().map(|&x| BigInt::from(x)).collect()
}

/// Parameters drawn from N(0, 0.1²), with norm gains around 1, so that every
/// path (including FiLM) carries signal.
pub fn randomize(model: &mut Model<f64>, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let names: Vec<String> = model.param_names().map(str::to_owned).collect();
    for name in names {
        let gain = name.ends_with(".gamma");
        for x in model.param_mut(&name).unwrap() {
            let z: f64 = rng.random_range(-1.0..1.0) * 0.17;
            *x = if gain { 1.0 + z } else { z };
        }
    }
}

/// One to three sequences of 1–11 random signed integers (1–39 digits) with
/// roughly 30% of positions masked.
pub fn random_batch(rng: &mut ChaCha8Rng) -> Vec<MaskedSample> {
    (0..rng.random_range(1..4))
        .map(|_| {
            let len = rng.random_range(1..12);
            let terms: Vec<BigInt> = (0..len)
                .map(|_| {
                    let digits = rng.random_range(1..40);
                    let s: String = (0..digits).map(|_| char::from(b'0' + rng.random_range(0..10u8))).collect();
                    let x: BigInt = s.parse().unwrap();
                    if rng.random_bool(0.3) { -x } else { x }
                })
                .collect();
            let mask = (0..len).map(|_| rng.random_bool(0.3)).collect();
            MaskedSample::with_mask(Arc::new(EncodedSequence::new(&terms)), mask)
        })
        .collect()
}

pub fn gradcheck_samples() -> Vec<MaskedSample> {
    let seqs: [(&[i64], &[bool]); 3] = [
        (&[1, 1, 2, 3, 5, 8, 13], &[false, true, false, false, true, false, true]),
        (&[-4, 0, 9, 123456789, 7], &[true, false, false, true, false]),
        (&[2, 3, 5, 7], &[false, false, true, false]),
    ];
    seqs.iter()
        .map(|(t, m)| MaskedSample::with_mask(Arc::new(EncodedSequence::new(&big(t))), m.to_vec()))
        .collect()
}

pub fn total_loss(model: &Model<f64>, samples: &[MaskedSample]) -> f64 {
    let w = LossWeights::default();
    let batch = PackedBatch::<f64>::from_samples(samples);
    let rows = batch.masked_rows();
    let (pred, _) = model.forward(&batch, &rows, Mode::Eval);
    masked_loss_sums(&pred, &row_targets(samples), &w, 1.0).breakdown(&w).total
}

pub fn analytic_grads(model: &Model<f64>, samples: &[MaskedSample]) -> ParamStore<f64> {
    let w = LossWeights::default();
    let batch = PackedBatch::<f64>::from_samples(samples);
    let rows = batch.masked_rows();
    let (pred, cache) = model.forward(&batch, &rows, Mode::Eval);
    let n = rows.len() as f64;
    let (_, d) = masked_loss(&pred, &row_targets(samples), &w, 1.0, Some(1.0 / n));
    let mut grads = model.params.zeros_like();
    model.backward(&batch, &cache, &d.unwrap(), &mut grads);
    grads
}

/// Per-tensor relative error `‖a − n‖ / (‖a‖ + ‖n‖)` between analytic and
/// central-difference gradients on up to `per_tensor` sampled coordinates.
pub fn gradcheck(variant: Variant, seed: u64, per_tensor: usize) -> Vec<(String, f64)> {
    let config = ModelConfig::new(variant, 2, 16, 2).with_dropout(0.0);
    let mut model = Model::<f64>::new(config, seed).unwrap();
    randomize(&mut model, seed);
    let samples = gradcheck_samples();
    let grads = analytic_grads(&model, &samples);
    let tokens: Vec<usize> = samples
        .iter()
        .flat_map(|s| s.encoded.tokens.iter().map(|&t| t as usize))
        .chain([intseq::model::MASK_TOKEN as usize])
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let eps = 1e-5;
    let mut out = Vec::new();
    for (id, spec) in model.layout.specs.clone().iter().enumerate() {
        let numel = spec.numel();
        let coords: Vec<usize> = if spec.name == "embed.token" {
            let d = spec.shape[1];
            tokens.iter().map(|&t| t * d + rng.random_range(0..d)).take(per_tensor).collect()
        } else {
            (0..per_tensor.min(numel)).map(|_| rng.random_range(0..numel)).collect()
        };
        let (mut diff, mut na, mut nn) = (0.0, 0.0, 0.0);
        for c in coords {
            let orig = model.params.data[id][c];
            model.params.data[id][c] = orig + eps;
            let plus = total_loss(&model, &samples);
            model.params.data[id][c] = orig - eps;
            let minus = total_loss(&model, &samples);
            model.params.data[id][c] = orig;
            let numeric = (plus - minus) / (2.0 * eps);
            let analytic = grads.data[id][c];
            diff += (analytic - numeric).powi(2);
            na += analytic * analytic;
            nn += numeric * numeric;
        }
        let denom = na.sqrt() + nn.sqrt();
        let rel = if denom < 1e-10 { 0.0 } else { diff.sqrt() / denom };
        out.push((spec.name.clone(), rel));
    }
    out
}
