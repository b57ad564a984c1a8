//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`harness = false`) so that every criterion is
//! reported even when an earlier one fails. Exits non-zero if any fails.

mod common;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use intseq::analytics::{chance_mma, evaluate_masked, totient_ratio, EvalConfig, UniformPredictor};
use intseq::corpus::{filter_corpus, parse_keywords_file, parse_stripped_file, split_corpus, MAX_PREFIX};
use intseq::featurizer::{
    features_from_residues, magnitude_value, modulus_at, residues, MaskedSample, SignClass,
    TermTargets, MODULI, NUM_MODULI, RESIDUE_LOGITS,
};
use intseq::model::{Mode, Model, ModelConfig, PackedBatch, Size, Variant};
use intseq::solver::{self, select_mode, SolverConfig, SolverMode, SolverQuery};
use intseq::trainer::{
    masked_loss_sums, modulo_loss, row_targets, sign_loss, Dataset, LossWeights, Recorder, TrainConfig, Trainer,
};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, ok: impl Into<String>, fail: impl Into<String>) -> Outcome {
    if cond {
        Ok(ok.into())
    } else {
        Err(fail.into())
    }
}

fn within(elapsed: Duration, limit_secs: u64, detail: String) -> Outcome {
    check(
        elapsed.as_secs() < limit_secs,
        format!("{detail}; {:.1}s", elapsed.as_secs_f64()),
        format!("{detail}; took {:.1}s, limit {limit_secs}s", elapsed.as_secs_f64()),
    )
}

fn random_bigint(rng: &mut impl Rng, max_digits: usize) -> BigInt {
    let digits = rng.random_range(1..=max_digits);
    let mut s = String::with_capacity(digits + 1);
    s.push(char::from(b'1' + rng.random_range(0..9u8)));
    for _ in 1..digits {
        s.push(char::from(b'0' + rng.random_range(0..10u8)));
    }
    let x: BigInt = s.parse().unwrap();
    if rng.random_bool(0.5) {
        -x
    } else {
        x
    }
}

fn oracle_residue(x: &BigInt, m: u32) -> u32 {
    x.mod_floor(&BigInt::from(m)).to_u32().unwrap()
}

fn feature_invariants() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    // Composite modulus and its prime-power factors.
    let pairs: [(u32, &[u32]); 10] = [
        (6, &[2, 3]),
        (10, &[2, 5]),
        (12, &[4, 3]),
        (14, &[2, 7]),
        (15, &[3, 5]),
        (21, &[3, 7]),
        (30, &[2, 3, 5]),
        (36, &[4, 9]),
        (60, &[4, 3, 5]),
        (100, &[4, 25]),
    ];
    let mut worst_norm = 0.0f64;
    let mut worst_mag = 0.0f64;
    for i in 0..100_000 {
        let x = random_bigint(&mut rng, 400);
        let res = residues(&x);
        let f = features_from_residues(&res);
        for k in 0..NUM_MODULI {
            worst_norm = worst_norm.max((f[2 * k].powi(2) + f[2 * k + 1].powi(2) - 1.0).abs());
        }
        let r = |m: u32| u32::from(res[(m - 2) as usize]);
        if i % 10 == 0 {
            for m in MODULI {
                if r(m) != oracle_residue(&x, m) {
                    return Err(format!("residue of {x} mod {m} is {} not {}", r(m), oracle_residue(&x, m)));
                }
            }
        }
        for (c, parts) in pairs {
            for &p in parts {
                if r(c) % p != r(p) {
                    return Err(format!("CRT inconsistency for {x}: r{c}={} r{p}={}", r(c), r(p)));
                }
            }
        }
        if x.abs() <= BigInt::from(10u64.pow(15)) && !x.is_zero() {
            let v = magnitude_value(&x);
            let back = 10f64.powf(v - 1.0);
            let exact = x.abs().to_f64().unwrap();
            worst_mag = worst_mag.max((back - exact).abs() / exact);
        }
    }
    if worst_norm > 1e-9 {
        return Err(format!("sin²+cos² deviates by {worst_norm:e}"));
    }
    if worst_mag >= 1e-10 {
        return Err(format!("magnitude round trip error {worst_mag:e}"));
    }
    within(
        start.elapsed(),
        30,
        format!("1e5 integers, max |sin²+cos²−1| {worst_norm:.1e}, max round-trip rel err {worst_mag:.1e}"),
    )
}

fn fixture() -> Vec<intseq::SequenceRecord> {
    let dir = common::data_dir();
    filter_corpus(
        parse_stripped_file(&dir.join("stripped")).unwrap(),
        &parse_keywords_file(&dir.join("keywords")).unwrap(),
    )
}

fn loss_calibration() -> Outcome {
    let xs: Vec<BigInt> = (0..50).map(|i| BigInt::from(i * 7919 - 100)).collect();
    let res: Vec<[u8; NUM_MODULI]> = xs.iter().map(residues).collect();
    let uniform = modulo_loss(&vec![vec![0.0; RESIDUE_LOGITS]; xs.len()], &res);
    if uniform != 1.0 {
        return Err(format!("uniform modulo_loss = {uniform:.17}"));
    }
    let signs: Vec<SignClass> = xs.iter().map(SignClass::of).collect();
    let s = sign_loss(&vec![[0.0; 3]; xs.len()], &signs);
    if (s - 3f64.ln()).abs() > 1e-6 {
        return Err(format!("uniform sign_loss = {s}"));
    }
    let model = Model::new(ModelConfig::new(Variant::DualStream, 2, 16, 2), 3).unwrap();
    let config = TrainConfig { epochs: 10, batch_size: 32, grad_accum: 2, lr: 1e-3, ..TrainConfig::default() };
    let data = Dataset::from_records(&fixture(), MAX_PREFIX);
    let mut trainer = Trainer::new(model, config).unwrap();
    let mut rec = Recorder::default();
    trainer.fit(&data, &Dataset::default(), &mut rec).map_err(|e| e.to_string())?;
    if rec.steps.len() != 10 {
        return Err(format!("expected 10 steps, got {}", rec.steps.len()));
    }
    for st in &rec.steps {
        let l = st.loss;
        let identity = l.mag + l.sign + 2.0 * l.modulo;
        if (l.total - identity).abs() > 1e-12 * identity.abs().max(1.0) {
            return Err(format!("step {}: total {} vs {identity}", st.step, l.total));
        }
    }
    Ok(format!("uniform mod loss 1.0 exactly, sign loss ln 3 (err {:.1e}), identity on 10 steps", (s - 3f64.ln()).abs()))
}

fn gradient_check() -> Outcome {
    let start = Instant::now();
    let mut worst = (String::new(), 0.0f64);
    for variant in [Variant::DualStream, Variant::VanillaToken, Variant::MagnitudeOnly] {
        for (name, err) in common::gradcheck(variant, 11, 12) {
            if err > worst.1 {
                worst = (format!("{variant}:{name}"), err);
            }
        }
    }
    if worst.1 >= 1e-4 {
        return Err(format!("max relative error {:.2e} at {}", worst.1, worst.0));
    }
    within(start.elapsed(), 300, format!("max relative error {:.2e} ({})", worst.1, worst.0))
}

fn film_identity() -> Outcome {
    let mut dual = Model::<f64>::new(ModelConfig::new(Variant::DualStream, 2, 32, 4), 5).unwrap();
    common::randomize(&mut dual, 5);
    dual.param_mut("embed.film_gamma.weight").unwrap().fill(0.0);
    dual.param_mut("embed.film_beta.weight").unwrap().fill(0.0);
    let mag_only = dual.without_modulo_stream();
    if mag_only.config.variant != Variant::MagnitudeOnly {
        return Err("without_modulo_stream did not produce a MagnitudeOnly model".into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for b in 0..100 {
        let samples = common::random_batch(&mut rng);
        let batch = PackedBatch::<f64>::from_samples(&samples);
        let rows: Vec<usize> = (0..batch.rows()).collect();
        let (a, _) = dual.forward(&batch, &rows, Mode::Eval);
        let (c, _) = mag_only.forward(&batch, &rows, Mode::Eval);
        if a != c {
            return Err(format!("batch {b}: outputs differ"));
        }
    }
    Ok("100 batches bit-identical in f64".into())
}

fn masked_only_loss() -> Outcome {
    let mut model = Model::<f64>::new(ModelConfig::new(Variant::DualStream, 2, 16, 2), 9).unwrap();
    common::randomize(&mut model, 9);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let w = LossWeights::default();
    for b in 0..20 {
        let samples = common::random_batch(&mut rng);
        let batch = PackedBatch::<f64>::from_samples(&samples);
        let rows = batch.masked_rows();
        let (pred, _) = model.forward(&batch, &rows, Mode::Eval);
        let before = masked_loss_sums(&pred, &row_targets(&samples), &w, 1.0).breakdown(&w);
        let perturbed: Vec<MaskedSample> = samples
            .iter()
            .map(|s| {
                let mut enc = (*s.encoded).clone();
                for (i, &m) in s.mask.iter().enumerate() {
                    if !m {
                        enc.targets[i] = TermTargets::of(&random_bigint(&mut rng, 30));
                    }
                }
                MaskedSample::with_mask(Arc::new(enc), s.mask.clone())
            })
            .collect();
        let after = masked_loss_sums(&pred, &row_targets(&perturbed), &w, 1.0).breakdown(&w);
        if before != after {
            return Err(format!("batch {b}: {before:?} != {after:?}"));
        }
    }
    Ok("20 batches, LossBreakdown unchanged bit for bit".into())
}

/// Score of a signed candidate computed from first principles.
fn oracle_score(x: &BigInt, q: &SolverQuery) -> f64 {
    let v = if x.is_zero() { 0.0 } else { 1.0 + x.abs().to_f64().unwrap().log10() };
    let var = q.log_var.exp().max(1e-4);
    let d = v - q.mu;
    let mut modulo = 0.0;
    for (i, dist) in q.residue_probs.iter().enumerate() {
        let r = oracle_residue(x, modulus_at(i)) as usize;
        modulo += dist[r].max(1e-12).ln();
    }
    -(d * d) / (2.0 * var) + 0.3 * modulo
}

fn random_dist(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    // A peaked or flat distribution, sometimes with exact zeros or exact ties.
    let style = rng.random_range(0..4);
    let mut d: Vec<f64> = (0..n)
        .map(|_| match style {
            0 => rng.random::<f64>(),
            1 => rng.random::<f64>().powi(8),
            2 => f64::from(rng.random_range(0..3u8)),
            _ => 1.0,
        })
        .collect();
    if d.iter().all(|&p| p == 0.0) {
        d[0] = 1.0;
    }
    let s: f64 = d.iter().sum();
    d.iter_mut().for_each(|p| *p /= s);
    d
}

fn solver_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut done = 0;
    let mut widths = 0u64;
    while done < 1000 {
        let mu = rng.random_range(0.5..5.5);
        let sigma: f64 = rng.random_range(0.005..0.4);
        let lo = (mu - 3.0 * sigma).max(1.0);
        let hi = mu + 3.0 * sigma;
        let n_min = 10f64.powf(lo - 1.0).ceil().max(1.0) as u64;
        let n_max = if hi < 1.0 { 0 } else { 10f64.powf(hi - 1.0).floor() as u64 };
        if n_max >= n_min && n_max - n_min > 10_000 {
            continue;
        }
        let mut sign_probs = [0.0; 3];
        let s = random_dist(&mut rng, 2);
        sign_probs[0] = s[0] * 0.98;
        sign_probs[1] = s[1] * 0.98;
        sign_probs[2] = 0.02;
        let residue_probs = (0..NUM_MODULI).map(|i| random_dist(&mut rng, modulus_at(i) as usize)).collect();
        let k = rng.random_range(1..=25);
        let q = SolverQuery { mu, log_var: 2.0 * sigma.ln(), sign_probs, residue_probs, k };
        let got = solver::solve(&q).map_err(|e| e.to_string())?;
        let negative = sign_probs[1] > sign_probs[0];
        let mut expected: Vec<(f64, BigInt)> = if n_max >= n_min {
            (n_min..=n_max)
                .map(|n| {
                    let x = if negative { -BigInt::from(n) } else { BigInt::from(n) };
                    (oracle_score(&x, &q), x)
                })
                .collect()
        } else {
            Vec::new()
        };
        expected.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        expected.truncate(k);
        let got_pairs: Vec<(f64, BigInt)> = got.candidates.iter().map(|c| (c.score, c.value.clone())).collect();
        if got_pairs != expected {
            return Err(format!("query {done} (mu {mu}, sigma {sigma}): ranking differs from exhaustive scoring"));
        }
        let expected_mode = if n_max >= n_min { SolverMode::Dense } else { SolverMode::None };
        if got.mode != expected_mode {
            return Err(format!("query {done}: mode {:?}, expected {expected_mode:?}", got.mode));
        }
        widths += n_max.saturating_sub(n_min);
        done += 1;
    }
    within(start.elapsed(), 60, format!("1000 queries identical to exhaustive ranking (mean Δn {})", widths / 1000))
}

fn recovery_rate(targets: &[BigInt], expect_mode: SolverMode) -> Result<(f64, BTreeMap<SolverMode, usize>), String> {
    let mut hits = 0;
    let mut modes = BTreeMap::new();
    for x in targets {
        let q = SolverQuery::exact(x, 0.1, 1);
        let r = solver::solve_with(&q, &SolverConfig { beam_width: 64, ..SolverConfig::default() }).map_err(|e| e.to_string())?;
        *modes.entry(r.mode).or_insert(0) += 1;
        if r.top1() == Some(x) {
            hits += 1;
        }
    }
    let n_expected = modes.get(&expect_mode).copied().unwrap_or(0);
    if n_expected + modes.get(&SolverMode::Zero).copied().unwrap_or(0) != targets.len() {
        return Err(format!("unexpected modes {modes:?}"));
    }
    Ok((hits as f64 / targets.len() as f64, modes))
}

fn perfect_recovery() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let dense: Vec<BigInt> = (0..500).map(|_| BigInt::from(rng.random_range(-100_000i64..=100_000))).collect();
    let sieve: Vec<BigInt> = (0..500)
        .map(|_| {
            let x = BigInt::from(rng.random_range(10_000_000i64..=1_000_000_000_000));
            if rng.random_bool(0.5) {
                -x
            } else {
                x
            }
        })
        .collect();
    let crt: Vec<BigInt> = (0..500)
        .map(|_| {
            let mut x = random_bigint(&mut rng, 25);
            while x.abs() < BigInt::from(10u64).pow(24) {
                x = random_bigint(&mut rng, 25);
            }
            x
        })
        .collect();
    let (d, _) = recovery_rate(&dense, SolverMode::Dense)?;
    let (s, _) = recovery_rate(&sieve, SolverMode::Sieve)?;
    let (c, _) = recovery_rate(&crt, SolverMode::Crt)?;
    check(
        d == 1.0 && s >= 0.99 && c >= 0.95,
        format!("Top-1 dense {d:.3}, sieve {s:.3}, crt {c:.3}"),
        format!("Top-1 dense {d:.3} (need 1.0), sieve {s:.3} (need 0.99), crt {c:.3} (need 0.95)"),
    )
}

fn mode_dispatch() -> Outcome {
    let cases = [
        (BigInt::from(1_000_000u64), SolverMode::Dense),
        (BigInt::from(1_000_001u64), SolverMode::Sieve),
        (BigInt::from(100_000_000_000_000u64), SolverMode::Sieve),
        (BigInt::from(100_000_000_000_001u64), SolverMode::Crt),
    ];
    for (w, want) in &cases {
        let got = select_mode(w);
        if got != *want {
            return Err(format!("Δn = {w}: {got:?}, expected {want:?}"));
        }
    }
    Ok("10^6 dense, 10^6+1 sieve, 10^14 sieve, 10^14+1 crt".into())
}

fn number_theory() -> Outcome {
    for m in 2u64..=101 {
        let phi = (1..=m).filter(|k| k.gcd(&m) == 1).count() as u64;
        if totient_ratio(m) * m != Ratio::from_integer(phi) {
            return Err(format!("φ({m})/m = {} but brute force φ = {phi}", totient_ratio(m)));
        }
    }
    if totient_ratio(96) != Ratio::new(1, 3) {
        return Err(format!("φ(96)/96 = {}", totient_ratio(96)));
    }
    let total: u32 = MODULI.sum();
    check(
        total == 5150 && RESIDUE_LOGITS == 5150,
        "φ(m)/m exact for m in 2..=101, φ(96)/96 = 1/3, Σm = 5150",
        format!("Σm = {total}, logits {RESIDUE_LOGITS}"),
    )
}

fn param_counts() -> Outcome {
    let mut parts = Vec::new();
    for (size, target) in [(Size::Small, 6.4e6), (Size::Middle, 29.0e6), (Size::Large, 91.5e6)] {
        let n = ModelConfig::preset(size, Variant::DualStream).param_count() as f64;
        let rel = (n - target) / target;
        parts.push(format!("{size:?} {:.2}M ({:+.1}%)", n / 1e6, rel * 100.0));
        if rel.abs() > 0.05 {
            return Err(parts.join(", "));
        }
    }
    Ok(parts.join(", "))
}

/// Settings of the overfit run besides the fixed shape and schedule length.
fn overfit_config() -> TrainConfig {
    TrainConfig {
        epochs: 800,
        batch_size: 8,
        grad_accum: 1,
        lr: 2e-3,
        mask_p: 0.5,
        seed: 42,
        ..TrainConfig::default()
    }
}

struct OverfitRun {
    final_loss: f64,
    mag_acc: f64,
    mma: f64,
}

fn overfit_run(variant: Variant) -> Result<OverfitRun, String> {
    let records = fixture();
    if records.len() != 64 {
        return Err(format!("fixture has {} filtered sequences, expected 64", records.len()));
    }
    let data = Dataset::from_records(&records, MAX_PREFIX);
    let config = overfit_config();
    let model = Model::new(ModelConfig::new(variant, 4, 128, 4).with_dropout(0.0), config.seed).unwrap();
    let mut trainer = Trainer::new(model, config.clone()).map_err(|e| e.to_string())?;
    let mut rec = Recorder::default();
    trainer.fit(&data, &Dataset::default(), &mut rec).map_err(|e| e.to_string())?;
    let final_loss = rec.epochs.last().map(|e| e.train.total).unwrap_or(f64::NAN);
    let eval = EvalConfig { seed: config.seed, mask_p: config.mask_p, ..EvalConfig::default() };
    let report = evaluate_masked(&trainer.model, &records, &eval);
    Ok(OverfitRun { final_loss, mag_acc: report.mag_acc, mma: report.mma })
}

fn tiny_overfit() -> Outcome {
    let start = Instant::now();
    let dual = overfit_run(Variant::DualStream)?;
    let ablation = overfit_run(Variant::MagnitudeOnly)?;
    let detail = format!(
        "dual: loss {:.4}, Mag Acc {:.4}, MMA {:.4}; magnitude-only: loss {:.4}",
        dual.final_loss, dual.mag_acc, dual.mma, ablation.final_loss
    );
    let mut failures = Vec::new();
    if dual.mag_acc < 0.99 {
        failures.push("Mag Acc < 0.99");
    }
    if dual.mma < 0.90 {
        failures.push("MMA < 0.90");
    }
    if dual.final_loss >= ablation.final_loss {
        failures.push("dual loss not below magnitude-only loss");
    }
    if !failures.is_empty() {
        return Err(format!("{detail}; {}", failures.join(", ")));
    }
    within(start.elapsed(), 1800, detail)
}

fn random_predictor_mma() -> Outcome {
    let split = split_corpus(fixture(), 42, [8, 1, 1]);
    let expected = chance_mma();
    let mut parts = Vec::new();
    for (name, part) in [("train", &split.train), ("validation", &split.validation), ("test", &split.test)] {
        // Every position masked so the small splits still give a usable sample.
        let cfg = EvalConfig { mask_p: 1.0, ..EvalConfig::default() };
        let r = evaluate_masked(&UniformPredictor::new(17), part, &cfg);
        parts.push(format!("{name} {:.4}", r.mma));
        if (r.mma - expected).abs() > 0.01 {
            return Err(format!("{name}: MMA {:.4} vs expected {expected:.4}", r.mma));
        }
    }
    Ok(format!("expected {expected:.4}; {}", parts.join(", ")))
}

fn run_cli(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_intseq")).args(args).output().map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr)))
    }
}

fn pipeline(root: &Path) -> Result<(Vec<u8>, Vec<u8>), String> {
    let p = |x: &Path| x.to_str().unwrap().to_owned();
    let data = p(&root.join("data"));
    let run = root.join("run");
    let ck = p(&run.join("model.ckpt"));
    let report = p(&run.join("report.json"));
    let solver_report = p(&run.join("solver.json"));
    let dir = common::data_dir();
    run_cli(&["ingest", "--stripped", &p(&dir.join("stripped")), "--keywords", &p(&dir.join("keywords")), "--out", &data])?;
    run_cli(&["split", "--data", &data, "--seed", "42"])?;
    run_cli(&[
        "train", "--data", &data, "--out", &p(&run), "--layers", "2", "--d-model", "32", "--heads", "4", "--epochs", "5",
        "--batch-size", "8", "--grad-accum", "1", "--lr", "1e-3",
    ])?;
    run_cli(&["eval", "--checkpoint", &ck, "--data", &data, "--split", "test", "--out", &report])?;
    run_cli(&["solver-eval", "--checkpoint", &ck, "--data", &data, "--split", "train", "--samples", "20", "--out", &solver_report])?;
    let read = |f: &str| fs::read(f).map_err(|e| format!("{f}: {e}"));
    Ok((read(&report)?, read(&solver_report)?))
}

fn determinism() -> Outcome {
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    let ra = pipeline(a.path())?;
    let rb = pipeline(b.path())?;
    check(
        ra == rb,
        format!("eval and solver-eval reports byte-identical ({} + {} bytes)", ra.0.len(), ra.1.len()),
        "reports differ between identical runs",
    )
}

fn main() {
    let filter: Option<String> = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let criteria: [Criterion; 13] = [
        ("feature_invariants", feature_invariants),
        ("loss_calibration", loss_calibration),
        ("gradient_check", gradient_check),
        ("film_identity", film_identity),
        ("masked_only_loss", masked_only_loss),
        ("solver_oracle_equivalence", solver_oracle),
        ("perfect_input_recovery", perfect_recovery),
        ("mode_dispatch", mode_dispatch),
        ("number_theory", number_theory),
        ("param_counts", param_counts),
        ("tiny_corpus_overfit", tiny_overfit),
        ("random_predictor_mma", random_predictor_mma),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    let mut ran = 0;
    for (name, f) in criteria {
        if filter.as_deref().is_some_and(|pat| !name.contains(pat)) {
            continue;
        }
        ran += 1;
        match std::panic::catch_unwind(f) {
            Ok(Ok(detail)) => println!("PASS {name}: {detail}"),
            Ok(Err(detail)) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
            Err(_) => {
                failed += 1;
                println!("FAIL {name}: panicked");
            }
        }
    }
    println!("acceptance: {}/{ran} criteria passed", ran - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
