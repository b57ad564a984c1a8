//! Evaluates reference predictors on the fixture corpus and prints the
//! residue spectrum with its totient correlation.
//!
//! cargo run --release --example evaluate -- [checkpoint]

use std::path::PathBuf;

use intseq::analytics::{
    evaluate_masked, spectrum, totient_correlation, EvalConfig, PerfectPredictor, Predictor, UniformPredictor,
};
use intseq::corpus::{filter_corpus, parse_keywords_file, parse_stripped_file};
use intseq::trainer::Checkpoint;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data");
    let records = filter_corpus(parse_stripped_file(&data.join("stripped"))?, &parse_keywords_file(&data.join("keywords"))?);
    let cfg = EvalConfig::default();

    let trained = match std::env::args().nth(1) {
        Some(path) => Some(Checkpoint::load(path.as_ref())?.model()?),
        None => None,
    };
    let mut predictors: Vec<(&str, &dyn Predictor)> = Vec::new();
    let perfect = PerfectPredictor::default();
    let uniform = UniformPredictor::new(7);
    predictors.push(("perfect", &perfect));
    predictors.push(("uniform", &uniform));
    if let Some(model) = &trained {
        predictors.push(("checkpoint", model));
    }

    for (name, p) in predictors {
        let r = evaluate_masked(p, &records, &cfg);
        println!(
            "{name:>10}: {} masked, Mag Acc {:.4}, Sign Acc {:.4}, MMA {:.4}",
            r.masked_positions, r.mag_acc, r.sign_acc, r.mma
        );
        let rows = spectrum(&r);
        let acc: Vec<String> = rows.iter().take(8).map(|row| format!("{}:{:.2}", row.m, row.acc)).collect();
        println!("            per-modulus accuracy {} ...", acc.join(" "));
        match totient_correlation(&rows) {
            Ok(c) => println!("            corr(NIG, φ(m)/m) r = {:+.3}, p = {:.3}", c.r, c.p_value),
            Err(e) => println!("            correlation undefined: {e}"),
        }
    }
    Ok(())
}
