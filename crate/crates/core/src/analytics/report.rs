//! Masked-position and next-term Solver evaluation, reports and the NIG
//! spectrum export.

use std::collections::BTreeMap;
use std::io::{self, Write};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{mean, MaskedMetrics};
use super::number_theory::{pearson, ratio_to_f64, totient_ratio, Correlation, CorrelationError};
use super::predictor::Predictor;
use crate::corpus::{bucket_of, truncate_prefix, Bucket, SequenceRecord, MAX_PREFIX, MIN_TERMS};
use crate::featurizer::{mask_encoded, modulus_at, EncodedSequence, MaskedSample, NUM_MODULI};
use crate::rng::{self, Purpose};
use crate::solver::{self, SolverConfig, SolverMode, SolverQuery};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub seed: u64,
    pub mask_p: f64,
    pub batch_size: usize,
    pub max_len: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { seed: 42, mask_p: 0.15, batch_size: 64, max_len: MAX_PREFIX }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct SolverEvalConfig {
    pub seed: u64,
    pub samples: usize,
    pub topk: Vec<usize>,
    pub batch_size: usize,
    pub max_len: usize,
}

impl Default for SolverEvalConfig {
    fn default() -> Self {
        Self { seed: 42, samples: 10_000, topk: vec![1, 10], batch_size: 64, max_len: MAX_PREFIX }
    }
}

/// Metrics over all masked positions of a split.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MaskedReport {
    pub seed: u64,
    pub mask_p: f64,
    pub masked_positions: u64,
    pub mag_acc: f64,
    pub sign_acc: f64,
    pub mma: f64,
    pub per_modulus_acc: Vec<f64>,
    pub per_modulus_ce: Vec<f64>,
    pub per_modulus_nig: Vec<f64>,
    pub bucket_mse: BTreeMap<Bucket, f64>,
    pub bucket_counts: BTreeMap<Bucket, u64>,
}

impl MaskedReport {
    pub fn from_metrics(m: &MaskedMetrics, seed: u64, mask_p: f64) -> Self {
        Self {
            seed,
            mask_p,
            masked_positions: m.count,
            mag_acc: m.mag_acc(),
            sign_acc: m.sign_acc(),
            mma: m.mma(),
            per_modulus_acc: m.per_modulus_acc(),
            per_modulus_ce: m.per_modulus_ce(),
            per_modulus_nig: m.per_modulus_nig(),
            bucket_mse: m.bucket_mse(),
            bucket_counts: m.bucket_counts(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize, PartialEq)]
pub struct ModeStats {
    pub calls: u64,
    /// Share of all queries dispatched to this mode.
    pub fraction: f64,
    /// Top-1 accuracy among the queries of this mode (0 when unused).
    pub top1: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
pub struct SolverBucketStats {
    pub count: u64,
    pub valid_rate: f64,
    pub topk: BTreeMap<usize, f64>,
}

/// Next-term Solver results.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SolverReport {
    pub seed: u64,
    pub samples: u64,
    pub topk: BTreeMap<usize, f64>,
    pub valid_rate: f64,
    pub mode_breakdown: BTreeMap<SolverMode, ModeStats>,
    pub bucket_breakdown: BTreeMap<Bucket, SolverBucketStats>,
    /// Queries the solver rejected (counted as `none` misses).
    pub errors: u64,
}

/// One JSON document per evaluation.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EvalReport {
    pub split: String,
    pub sequences: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub masked: Option<MaskedReport>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub solver: Option<SolverReport>,
}

impl EvalReport {
    pub fn mag_acc(&self) -> Option<f64> {
        self.masked.as_ref().map(|m| m.mag_acc)
    }

    pub fn mma(&self) -> Option<f64> {
        self.masked.as_ref().map(|m| m.mma)
    }

    /// Checks the structural invariants; returns the first violation.
    pub fn check_invariants(&self) -> Result<(), String> {
        let unit = |name: &str, x: f64| {
            if (0.0..=1.0).contains(&x) {
                Ok(())
            } else {
                Err(format!("{name} = {x} outside [0, 1]"))
            }
        };
        if let Some(m) = &self.masked {
            unit("mag_acc", m.mag_acc)?;
            unit("sign_acc", m.sign_acc)?;
            for (i, &a) in m.per_modulus_acc.iter().enumerate() {
                unit(&format!("acc[m={}]", modulus_at(i)), a)?;
            }
            if m.per_modulus_acc.len() != NUM_MODULI || m.per_modulus_nig.len() != NUM_MODULI {
                return Err("per-modulus vectors must have 100 entries".into());
            }
            if m.mma != mean(&m.per_modulus_acc) {
                return Err(format!("mma {} is not the mean of per_modulus_acc", m.mma));
            }
            if let Some(n) = m.per_modulus_nig.iter().find(|&&n| n > 1.0) {
                return Err(format!("NIG {n} exceeds 1"));
            }
            let bucketed: u64 = m.bucket_counts.values().sum();
            if bucketed != m.masked_positions {
                return Err(format!("bucket counts sum to {bucketed}, expected {}", m.masked_positions));
            }
        }
        if let Some(s) = &self.solver {
            unit("valid_rate", s.valid_rate)?;
            for (k, &a) in &s.topk {
                unit(&format!("top{k}"), a)?;
            }
            let mut total = 0.0;
            for (mode, st) in &s.mode_breakdown {
                unit(&format!("{mode} fraction"), st.fraction)?;
                unit(&format!("{mode} top1"), st.top1)?;
                total += st.fraction;
            }
            if s.samples > 0 && (total - 1.0).abs() > 1e-6 {
                return Err(format!("mode fractions sum to {total}"));
            }
            let none = s.mode_breakdown.get(&SolverMode::None).map_or(0.0, |st| st.fraction);
            if s.samples > 0 && (s.valid_rate - (1.0 - none)).abs() > 1e-9 {
                return Err(format!("valid_rate {} != 1 - none fraction {none}", s.valid_rate));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn encode_all(records: &[SequenceRecord], max_len: usize) -> Vec<Arc<EncodedSequence>> {
    records.par_iter().map(|r| Arc::new(EncodedSequence::new(truncate_prefix(r, max_len)))).collect()
}

/// Masked-position metrics with seeded masking; batches run in parallel and
/// are reduced in order, so results do not depend on the thread count.
pub fn evaluate_masked(predictor: &dyn Predictor, records: &[SequenceRecord], config: &EvalConfig) -> MaskedReport {
    let encoded = encode_all(records, config.max_len);
    let samples: Vec<MaskedSample> = encoded
        .into_iter()
        .enumerate()
        .map(|(i, e)| mask_encoded(e, config.mask_p, &mut rng::stream(config.seed, Purpose::EvalMask, 0, i as u64)))
        .collect();
    let parts: Vec<MaskedMetrics> = samples
        .par_chunks(config.batch_size.max(1))
        .enumerate()
        .map(|(key, chunk)| {
            let preds = predictor.predict(chunk, key as u64);
            let mut m = MaskedMetrics::default();
            for (sample, ps) in chunk.iter().zip(&preds) {
                for (i, p) in sample.masked_positions().zip(ps) {
                    m.add(p, &sample.targets()[i], bucket_of(&sample.encoded.terms[i]));
                }
            }
            m
        })
        .collect();
    let mut total = MaskedMetrics::default();
    for p in &parts {
        total.merge(p);
    }
    MaskedReport::from_metrics(&total, config.seed, config.mask_p)
}

/// Outcome of one next-term query.
#[derive(Debug, Clone, Copy)]
struct SolverOutcome {
    mode: SolverMode,
    error: bool,
    /// 1-based rank of the true value among the candidates.
    rank: Option<usize>,
    bucket: Bucket,
}

/// Indices of up to `n` sequences with at least `MIN_TERMS` terms, drawn
/// without replacement.
pub fn sample_indices(records: &[SequenceRecord], n: usize, seed: u64) -> Vec<usize> {
    let mut eligible: Vec<usize> = (0..records.len()).filter(|&i| records[i].len() >= MIN_TERMS).collect();
    rng::fisher_yates(&mut eligible, &mut rng::stream(seed, Purpose::SolverSample, 0, 0));
    eligible.truncate(n);
    eligible
}

/// Next-term evaluation: the final term of each sampled prefix is masked and
/// reconstructed by the solver. `none` outcomes and rejected queries count as
/// misses.
pub fn evaluate_solver(
    predictor: &dyn Predictor,
    records: &[SequenceRecord],
    config: &SolverEvalConfig,
    solver_config: &SolverConfig,
) -> SolverReport {
    let idx = sample_indices(records, config.samples, config.seed);
    let chosen: Vec<SequenceRecord> = idx.iter().map(|&i| records[i].clone()).collect();
    let samples: Vec<MaskedSample> =
        encode_all(&chosen, config.max_len).into_iter().map(MaskedSample::last_masked).collect();
    let k = config.topk.iter().copied().max().unwrap_or(1).max(1);
    let outcomes: Vec<SolverOutcome> = samples
        .par_chunks(config.batch_size.max(1))
        .enumerate()
        .flat_map_iter(|(key, chunk)| {
            let preds = predictor.predict(chunk, key as u64);
            chunk
                .iter()
                .zip(preds)
                .map(|(sample, ps)| {
                    let last = sample.len() - 1;
                    let truth = &sample.encoded.terms[last];
                    let bucket = bucket_of(truth);
                    let query = SolverQuery::from_prediction(&ps[0], k);
                    match solver::solve_with(&query, solver_config) {
                        Ok(res) => SolverOutcome {
                            mode: res.mode,
                            error: false,
                            rank: res.candidates.iter().position(|c| &c.value == truth).map(|r| r + 1),
                            bucket,
                        },
                        Err(_) => SolverOutcome { mode: SolverMode::None, error: true, rank: None, bucket },
                    }
                })
                .collect::<Vec<_>>()
        })
        .collect();
    summarize(&outcomes, &config.topk, config.seed)
}

fn rate(hits: u64, n: u64) -> f64 {
    if n == 0 {
        0.0
    } else {
        hits as f64 / n as f64
    }
}

fn summarize(outcomes: &[SolverOutcome], topk: &[usize], seed: u64) -> SolverReport {
    let n = outcomes.len() as u64;
    let hits_at = |os: &mut dyn Iterator<Item = &SolverOutcome>, k: usize| os.filter(|o| o.rank.is_some_and(|r| r <= k)).count() as u64;
    let topk_map = |os: &[&SolverOutcome]| -> BTreeMap<usize, f64> {
        topk.iter().map(|&k| (k, rate(hits_at(&mut os.iter().copied(), k), os.len() as u64))).collect()
    };
    let all: Vec<&SolverOutcome> = outcomes.iter().collect();
    let valid = outcomes.iter().filter(|o| o.mode != SolverMode::None).count() as u64;
    let mode_breakdown = SolverMode::ALL
        .iter()
        .map(|&mode| {
            let os: Vec<&SolverOutcome> = outcomes.iter().filter(|o| o.mode == mode).collect();
            let calls = os.len() as u64;
            let top1 = rate(hits_at(&mut os.iter().copied(), 1), calls);
            (mode, ModeStats { calls, fraction: rate(calls, n), top1 })
        })
        .collect();
    let bucket_breakdown = Bucket::ALL
        .iter()
        .filter_map(|&b| {
            let os: Vec<&SolverOutcome> = outcomes.iter().filter(|o| o.bucket == b).collect();
            if os.is_empty() {
                return None;
            }
            let count = os.len() as u64;
            let v = os.iter().filter(|o| o.mode != SolverMode::None).count() as u64;
            Some((b, SolverBucketStats { count, valid_rate: rate(v, count), topk: topk_map(&os) }))
        })
        .collect();
    SolverReport {
        seed,
        samples: n,
        topk: topk_map(&all),
        valid_rate: rate(valid, n),
        mode_breakdown,
        bucket_breakdown,
        errors: outcomes.iter().filter(|o| o.error).count() as u64,
    }
}

/// One row of the NIG spectrum export.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub m: u32,
    pub acc: f64,
    pub nig: f64,
    pub phi_ratio: f64,
}

pub fn spectrum(report: &MaskedReport) -> Vec<SpectrumRow> {
    (0..NUM_MODULI)
        .map(|i| {
            let m = modulus_at(i);
            SpectrumRow {
                m,
                acc: report.per_modulus_acc[i],
                nig: report.per_modulus_nig[i],
                phi_ratio: ratio_to_f64(totient_ratio(u64::from(m))),
            }
        })
        .collect()
}

/// Writes `m,acc,nig,phi_ratio` rows with a header line.
pub fn write_spectrum_csv(rows: &[SpectrumRow], mut w: impl Write) -> io::Result<()> {
    writeln!(w, "m,acc,nig,phi_ratio")?;
    for r in rows {
        writeln!(w, "{},{},{},{}", r.m, r.acc, r.nig, r.phi_ratio)?;
    }
    Ok(())
}

/// Pearson correlation between per-modulus NIG and `φ(m)/m`.
pub fn totient_correlation(rows: &[SpectrumRow]) -> Result<Correlation, CorrelationError> {
    let nig: Vec<f64> = rows.iter().map(|r| r.nig).collect();
    let phi: Vec<f64> = rows.iter().map(|r| r.phi_ratio).collect();
    pearson(&nig, &phi)
}
