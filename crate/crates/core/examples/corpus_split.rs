//! Parses and filters an OEIS-style corpus, then splits it deterministically.
//!
//! cargo run --example corpus_split -- [stripped] [keywords] [seed]

use std::collections::BTreeMap;
use std::path::PathBuf;

use intseq::corpus::{bucket_of, filter_corpus, parse_keywords_file, parse_stripped_file, split_corpus, SPLIT_NAMES};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data");
    let args: Vec<String> = std::env::args().skip(1).collect();
    let stripped = args.first().map_or(data.join("stripped"), PathBuf::from);
    let keywords = args.get(1).map_or(data.join("keywords"), PathBuf::from);
    let seed = args.get(2).map_or(Ok(42), |s| s.parse())?;

    let raw = parse_stripped_file(&stripped)?;
    let n_raw = raw.len();
    let records = filter_corpus(raw, &parse_keywords_file(&keywords)?);
    println!("{n_raw} sequences parsed, {} kept after filtering", records.len());

    let mut buckets = BTreeMap::new();
    for r in &records {
        for x in &r.terms {
            *buckets.entry(bucket_of(x)).or_insert(0usize) += 1;
        }
    }
    println!("terms per magnitude bucket: {buckets:?}");

    let split = split_corpus(records, seed, [8, 1, 1]);
    for name in SPLIT_NAMES {
        let part = split.part(name).unwrap_or_default();
        let ids: Vec<&str> = part.iter().take(4).map(|r| r.id.as_str()).collect();
        println!("{name:>10}: {:>4} sequences, e.g. {}", part.len(), ids.join(" "));
    }
    Ok(())
}
