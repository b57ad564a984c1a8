//! OEIS-style corpus handling: parsing, filtering, splitting, truncation and
//! magnitude buckets.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::io::{self, BufRead, Write};
use std::path::Path;

use num_bigint::BigInt;
use num_traits::Signed;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{self, Purpose};

/// Minimum number of terms a sequence needs to enter the corpus.
pub const MIN_TERMS: usize = 10;

/// Maximum prefix length fed to the model.
pub const MAX_PREFIX: usize = 128;

/// Keywords marking sequences whose terms are not a plain integer sequence
/// (constants, continued fractions, digit expansions, tables, ...) or whose
/// quality is doubtful.
pub const EXCLUDED_KEYWORDS: [&str; 11] = [
    "cons", "cofr", "frac", "base", "word", "fini", "tabl", "dead", "unkn", "less", "dumb",
];

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("io error: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{path}: {message}")]
    Manifest { path: String, message: String },
}

fn parse_err(line: usize, message: impl Into<String>) -> CorpusError {
    CorpusError::Parse { line, message: message.into() }
}

/// `A` followed by six or seven digits.
pub fn is_valid_id(id: &str) -> bool {
    let Some(digits) = id.strip_prefix('A') else {
        return false;
    };
    (6..=7).contains(&digits.len()) && digits.bytes().all(|b| b.is_ascii_digit())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequenceRecord {
    pub id: String,
    pub terms: Vec<BigInt>,
    pub keywords: BTreeSet<String>,
}

impl SequenceRecord {
    pub fn new(id: impl Into<String>, terms: Vec<BigInt>) -> Self {
        Self { id: id.into(), terms, keywords: BTreeSet::new() }
    }

    /// Builds a record from machine integers. Mostly useful in tests and examples.
    pub fn from_i64(id: impl Into<String>, terms: &[i64]) -> Self {
        Self::new(id, terms.iter().map(|&t| BigInt::from(t)).collect())
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

/// Parses the OEIS `stripped` format: `A000045 ,0,1,1,2,3,5,`.
///
/// Lines starting with `#` and blank lines are skipped.
pub fn parse_stripped(reader: impl BufRead) -> Result<Vec<SequenceRecord>, CorpusError> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        out.push(parse_stripped_line(line, line_no)?);
    }
    Ok(out)
}

fn parse_stripped_line(line: &str, line_no: usize) -> Result<SequenceRecord, CorpusError> {
    let (id, rest) = line
        .split_once(char::is_whitespace)
        .ok_or_else(|| parse_err(line_no, "expected `<id> ,t1,t2,...,`"))?;
    if !is_valid_id(id) {
        return Err(parse_err(line_no, format!("invalid sequence id `{id}`")));
    }
    let body = rest.trim();
    let body = body
        .strip_prefix(',')
        .and_then(|b| b.strip_suffix(','))
        .ok_or_else(|| parse_err(line_no, "term list must start and end with `,`"))?;
    let terms = body
        .split(',')
        .map(|tok| {
            tok.trim()
                .parse::<BigInt>()
                .map_err(|_| parse_err(line_no, format!("non-integer term `{tok}`")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if terms.is_empty() {
        return Err(parse_err(line_no, "no terms"));
    }
    Ok(SequenceRecord::new(id, terms))
}

pub fn parse_stripped_file(path: &Path) -> Result<Vec<SequenceRecord>, CorpusError> {
    let file = std::fs::File::open(path)?;
    parse_stripped(io::BufReader::new(file))
}

/// Inverse of [`parse_stripped`].
pub fn write_stripped(records: &[SequenceRecord], mut w: impl Write) -> io::Result<()> {
    for r in records {
        write!(w, "{} ,", r.id)?;
        for t in &r.terms {
            write!(w, "{t},")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

pub fn serialize_stripped(records: &[SequenceRecord]) -> String {
    let mut buf = Vec::new();
    write_stripped(records, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("stripped output is ASCII")
}

pub type KeywordMap = BTreeMap<String, BTreeSet<String>>;

/// Parses `A000045 nonn,core` lines into an id → keyword set map.
/// Duplicate ids are merged.
pub fn parse_keywords(reader: impl BufRead) -> Result<KeywordMap, CorpusError> {
    let mut map = KeywordMap::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (id, rest) = match line.split_once(char::is_whitespace) {
            Some((id, rest)) => (id, rest.trim()),
            None => (line, ""),
        };
        if !is_valid_id(id) {
            return Err(parse_err(line_no, format!("invalid sequence id `{id}`")));
        }
        let entry = map.entry(id.to_string()).or_default();
        for kw in rest.split(',').map(str::trim).filter(|k| !k.is_empty()) {
            if !kw.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'-') {
                return Err(parse_err(line_no, format!("malformed keyword `{kw}`")));
            }
            entry.insert(kw.to_ascii_lowercase());
        }
    }
    Ok(map)
}

pub fn parse_keywords_file(path: &Path) -> Result<KeywordMap, CorpusError> {
    let file = std::fs::File::open(path)?;
    parse_keywords(io::BufReader::new(file))
}

/// Drops short sequences and sequences carrying an excluded keyword.
///
/// Keywords found in `keywords` are attached to the surviving records; ids
/// missing from the map are treated as having no keywords.
pub fn filter_corpus(records: Vec<SequenceRecord>, keywords: &KeywordMap) -> Vec<SequenceRecord> {
    records
        .into_iter()
        .filter_map(|mut r| {
            if let Some(kw) = keywords.get(&r.id) {
                r.keywords.extend(kw.iter().cloned());
            }
            let excluded = r.keywords.iter().any(|k| EXCLUDED_KEYWORDS.contains(&k.as_str()));
            (r.terms.len() >= MIN_TERMS && !excluded).then_some(r)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusSplit {
    pub train: Vec<SequenceRecord>,
    pub validation: Vec<SequenceRecord>,
    pub test: Vec<SequenceRecord>,
    pub seed: u64,
    pub ratios: [u32; 3],
}

/// Split sizes `(train, validation, test)` for `n` records: validation and test
/// get the floor of their proportion, train takes the remainder.
pub fn split_sizes(n: usize, ratios: [u32; 3]) -> (usize, usize, usize) {
    let total: u64 = ratios.iter().map(|&r| u64::from(r)).sum();
    let val = (n as u64 * u64::from(ratios[1]) / total) as usize;
    let test = (n as u64 * u64::from(ratios[2]) / total) as usize;
    (n - val - test, val, test)
}

/// Deterministic train/validation/test split.
///
/// Records are sorted by id, shuffled with Fisher–Yates driven by a ChaCha8
/// stream seeded from `seed`, then sliced contiguously.
///
/// # Panics
/// If any ratio is zero.
pub fn split_corpus(mut records: Vec<SequenceRecord>, seed: u64, ratios: [u32; 3]) -> CorpusSplit {
    assert!(ratios.iter().all(|&r| r > 0), "split ratios must be positive");
    records.sort_by(|a, b| a.id.cmp(&b.id));
    rng::fisher_yates(&mut records, &mut rng::stream(seed, Purpose::Split, 0, 0));
    let (n_train, n_val, _) = split_sizes(records.len(), ratios);
    let test = records.split_off(n_train + n_val);
    let validation = records.split_off(n_train);
    CorpusSplit { train: records, validation, test, seed, ratios }
}

/// Header written next to the three id lists of a split.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitHeader {
    pub seed: u64,
    pub ratios: [u32; 3],
    pub counts: [usize; 3],
}

pub const SPLIT_NAMES: [&str; 3] = ["train", "validation", "test"];

impl CorpusSplit {
    pub fn header(&self) -> SplitHeader {
        SplitHeader {
            seed: self.seed,
            ratios: self.ratios,
            counts: [self.train.len(), self.validation.len(), self.test.len()],
        }
    }

    pub fn part(&self, name: &str) -> Option<&[SequenceRecord]> {
        match name {
            "train" => Some(&self.train),
            "validation" | "val" => Some(&self.validation),
            "test" => Some(&self.test),
            _ => None,
        }
    }

    /// Writes `train.txt`, `validation.txt`, `test.txt` (one id per line) and
    /// `split.json`.
    pub fn write_manifest(&self, dir: &Path) -> Result<(), CorpusError> {
        std::fs::create_dir_all(dir)?;
        for (name, part) in SPLIT_NAMES.iter().zip([&self.train, &self.validation, &self.test]) {
            let mut f = io::BufWriter::new(std::fs::File::create(dir.join(format!("{name}.txt")))?);
            for r in part {
                writeln!(f, "{}", r.id)?;
            }
            f.flush()?;
        }
        let header = serde_json::to_string_pretty(&self.header()).expect("header serializes");
        std::fs::write(dir.join("split.json"), header + "\n")?;
        Ok(())
    }

    /// Rebuilds a split from a manifest directory and the corpus it was made from.
    pub fn read_manifest(dir: &Path, corpus: &[SequenceRecord]) -> Result<Self, CorpusError> {
        let header_path = dir.join("split.json");
        let header: SplitHeader = serde_json::from_slice(&std::fs::read(&header_path)?).map_err(|e| {
            CorpusError::Manifest { path: header_path.display().to_string(), message: e.to_string() }
        })?;
        let by_id: BTreeMap<&str, &SequenceRecord> = corpus.iter().map(|r| (r.id.as_str(), r)).collect();
        let mut parts: Vec<Vec<SequenceRecord>> = Vec::with_capacity(3);
        for (name, &count) in SPLIT_NAMES.iter().zip(header.counts.iter()) {
            let path = dir.join(format!("{name}.txt"));
            let text = std::fs::read_to_string(&path)?;
            let mut part = Vec::with_capacity(count);
            for id in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
                let rec = by_id.get(id).ok_or_else(|| CorpusError::Manifest {
                    path: path.display().to_string(),
                    message: format!("id {id} not present in corpus"),
                })?;
                part.push((*rec).clone());
            }
            if part.len() != count {
                return Err(CorpusError::Manifest {
                    path: path.display().to_string(),
                    message: format!("expected {count} ids, found {}", part.len()),
                });
            }
            parts.push(part);
        }
        let test = parts.pop().unwrap_or_default();
        let validation = parts.pop().unwrap_or_default();
        let train = parts.pop().unwrap_or_default();
        Ok(Self { train, validation, test, seed: header.seed, ratios: header.ratios })
    }

    pub fn is_disjoint(&self) -> bool {
        let mut seen = HashSet::new();
        [&self.train, &self.validation, &self.test]
            .into_iter()
            .flatten()
            .all(|r| seen.insert(r.id.as_str()))
    }
}

/// First `min(len, max_len)` terms.
pub fn truncate_prefix(record: &SequenceRecord, max_len: usize) -> &[BigInt] {
    assert!(max_len >= 1, "prefix length must be at least 1");
    &record.terms[..record.terms.len().min(max_len)]
}

/// Value-magnitude bucket used for stratified evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Bucket {
    Small,
    Medium,
    Large,
    Huge,
    Astronomical,
}

impl Bucket {
    pub const ALL: [Bucket; 5] =
        [Bucket::Small, Bucket::Medium, Bucket::Large, Bucket::Huge, Bucket::Astronomical];

    /// Exclusive upper bound of the bucket as a power of ten.
    fn upper_exponent(self) -> Option<u32> {
        match self {
            Bucket::Small => Some(2),
            Bucket::Medium => Some(5),
            Bucket::Large => Some(20),
            Bucket::Huge => Some(50),
            Bucket::Astronomical => None,
        }
    }
}

impl fmt::Display for Bucket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

pub fn bucket_of(x: &BigInt) -> Bucket {
    let abs = x.abs();
    for b in Bucket::ALL {
        match b.upper_exponent() {
            Some(e) if abs < BigInt::from(10u32).pow(e) => return b,
            Some(_) => continue,
            None => return b,
        }
    }
    Bucket::Astronomical
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn big(s: &str) -> BigInt {
        s.parse().unwrap()
    }

    #[test]
    fn parses_stripped_line() {
        let recs = parse_stripped("A000045 ,0,1,1,2,3,5,\n".as_bytes()).unwrap();
        assert_eq!(recs, vec![SequenceRecord::from_i64("A000045", &[0, 1, 1, 2, 3, 5])]);
    }

    #[test]
    fn comments_and_empty_input() {
        assert!(parse_stripped("# header\n".as_bytes()).unwrap().is_empty());
        assert!(parse_stripped("".as_bytes()).unwrap().is_empty());
    }

    #[test]
    fn parses_beyond_64_bits() {
        let recs = parse_stripped("A123456 ,1,-9223372036854775809,\n".as_bytes()).unwrap();
        assert_eq!(recs[0].terms[1].to_string(), "-9223372036854775809");
        assert_eq!(recs[0].terms[1], BigInt::from(i64::MIN) - 1);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = parse_stripped("# c\nA000001 ,1,2,\nA000002 ,1,x,\n".as_bytes()).unwrap_err();
        assert!(matches!(err, CorpusError::Parse { line: 3, .. }), "{err}");
        let err = parse_stripped("A000002 1,2,3\n".as_bytes()).unwrap_err();
        assert!(matches!(err, CorpusError::Parse { line: 1, .. }));
        let err = parse_stripped("B000002 ,1,\n".as_bytes()).unwrap_err();
        assert!(matches!(err, CorpusError::Parse { line: 1, .. }));
        let err = parse_stripped("A000002\n".as_bytes()).unwrap_err();
        assert!(matches!(err, CorpusError::Parse { line: 1, .. }));
    }

    #[test]
    fn keyword_parsing() {
        let m = parse_keywords("A000045 nonn,core\n".as_bytes()).unwrap();
        assert_eq!(m["A000045"], ["nonn", "core"].iter().map(|s| s.to_string()).collect());
        assert!(parse_keywords("".as_bytes()).unwrap().is_empty());
        let m = parse_keywords("A000045 nonn\nA000045 Core,easy\n".as_bytes()).unwrap();
        assert_eq!(m["A000045"].len(), 3);
        assert!(m["A000045"].contains("core"));
        let err = parse_keywords("A1 nonn\n".as_bytes()).unwrap_err();
        assert!(matches!(err, CorpusError::Parse { line: 1, .. }));
        let err = parse_keywords("\nA000001 no nn\n".as_bytes()).unwrap_err();
        assert!(matches!(err, CorpusError::Parse { line: 2, .. }));
    }

    #[test]
    fn filter_rules() {
        let nine = SequenceRecord::from_i64("A000001", &[1; 9]);
        let based = SequenceRecord::from_i64("A000002", &[1; 12]);
        let kept = SequenceRecord::from_i64("A000003", &[1; 10]);
        let unknown = SequenceRecord::from_i64("A000004", &[1; 10]);
        let mut kw = KeywordMap::new();
        kw.insert("A000002".into(), ["base".to_string(), "nonn".to_string()].into());
        kw.insert("A000003".into(), ["nonn".to_string()].into());
        let out = filter_corpus(vec![nine, based, kept, unknown], &kw);
        let ids: Vec<_> = out.iter().map(|r| r.id.as_str()).collect();
        assert_eq!(ids, ["A000003", "A000004"]);
        assert!(out[0].keywords.contains("nonn"));
    }

    #[test]
    fn every_excluded_keyword_excludes() {
        for k in EXCLUDED_KEYWORDS {
            let mut kw = KeywordMap::new();
            kw.insert("A000010".into(), [k.to_string()].into());
            let out = filter_corpus(vec![SequenceRecord::from_i64("A000010", &[2; 20])], &kw);
            assert!(out.is_empty(), "{k}");
        }
    }

    #[test]
    fn split_sizes_match_ratios() {
        assert_eq!(split_sizes(10, [8, 1, 1]), (8, 1, 1));
        assert_eq!(split_sizes(274_705, [8, 1, 1]), (219_765, 27_470, 27_470));
        assert_eq!(split_sizes(0, [8, 1, 1]), (0, 0, 0));
    }

    fn toy_corpus(n: usize) -> Vec<SequenceRecord> {
        (0..n).map(|i| SequenceRecord::from_i64(format!("A{:06}", i + 1), &[i as i64; 10])).collect()
    }

    #[test]
    fn split_is_deterministic_and_order_free() {
        let a = split_corpus(toy_corpus(10), 42, [8, 1, 1]);
        assert_eq!((a.train.len(), a.validation.len(), a.test.len()), (8, 1, 1));
        let mut reversed = toy_corpus(10);
        reversed.reverse();
        let b = split_corpus(reversed, 42, [8, 1, 1]);
        assert_eq!(a, b);
        assert!(a.is_disjoint());
        let c = split_corpus(toy_corpus(10), 7, [8, 1, 1]);
        assert_ne!(a.train, c.train);
    }

    #[test]
    fn manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let corpus = toy_corpus(30);
        let split = split_corpus(corpus.clone(), 42, [8, 1, 1]);
        split.write_manifest(dir.path()).unwrap();
        let back = CorpusSplit::read_manifest(dir.path(), &corpus).unwrap();
        assert_eq!(back, split);
        let header: SplitHeader =
            serde_json::from_slice(&std::fs::read(dir.path().join("split.json")).unwrap()).unwrap();
        assert_eq!(header.counts, [24, 3, 3]);
    }

    #[test]
    fn truncation() {
        let long = SequenceRecord::from_i64("A000001", &(0..168).collect::<Vec<_>>());
        assert_eq!(truncate_prefix(&long, 128).len(), 128);
        assert_eq!(truncate_prefix(&long, 128)[127], BigInt::from(127));
        let short = SequenceRecord::from_i64("A000002", &[3; 10]);
        assert_eq!(truncate_prefix(&short, 128), &short.terms[..]);
        assert_eq!(truncate_prefix(&short, 1).len(), 1);
    }

    #[test]
    fn bucket_boundaries() {
        assert_eq!(bucket_of(&big("99")), Bucket::Small);
        assert_eq!(bucket_of(&big("100")), Bucket::Medium);
        assert_eq!(bucket_of(&big("-100")), Bucket::Medium);
        assert_eq!(bucket_of(&big("0")), Bucket::Small);
        assert_eq!(bucket_of(&big("99999")), Bucket::Medium);
        assert_eq!(bucket_of(&big("100000")), Bucket::Large);
        assert_eq!(bucket_of(&BigInt::from(10u32).pow(20)), Bucket::Huge);
        assert_eq!(bucket_of(&(BigInt::from(10u32).pow(50) - 1)), Bucket::Huge);
        assert_eq!(bucket_of(&BigInt::from(10u32).pow(50)), Bucket::Astronomical);
    }

    fn arb_record() -> impl Strategy<Value = SequenceRecord> {
        (1u32..9_999_999, prop::collection::vec("-?[1-9][0-9]{0,40}|0", 1..20)).prop_map(|(id, terms)| {
            SequenceRecord::new(format!("A{id:07}"), terms.iter().map(|t| big(t)).collect())
        })
    }

    proptest! {
        #[test]
        fn bucket_predicates_partition(digits in "-?[1-9][0-9]{0,59}") {
            let x = big(&digits);
            let abs = x.abs();
            let p = |e: u32| BigInt::from(10u32).pow(e);
            let preds = [
                abs < p(2),
                abs >= p(2) && abs < p(5),
                abs >= p(5) && abs < p(20),
                abs >= p(20) && abs < p(50),
                abs >= p(50),
            ];
            prop_assert_eq!(preds.iter().filter(|&&b| b).count(), 1);
            let idx = preds.iter().position(|&b| b).unwrap();
            prop_assert_eq!(bucket_of(&x), Bucket::ALL[idx]);
        }

        #[test]
        fn stripped_round_trip(records in prop::collection::vec(arb_record(), 0..6)) {
            let text = serialize_stripped(&records);
            prop_assert_eq!(parse_stripped(text.as_bytes()).unwrap(), records);
        }

        #[test]
        fn filter_is_idempotent(lens in prop::collection::vec(1usize..15, 0..20), tags in prop::collection::vec(0usize..14, 0..20)) {
            let records: Vec<_> = lens.iter().enumerate()
                .map(|(i, &l)| SequenceRecord::from_i64(format!("A{:06}", i), &vec![1; l])).collect();
            let pool = ["nonn", "core", "easy"];
            let mut kw = KeywordMap::new();
            for (i, &t) in tags.iter().enumerate() {
                let word = if t < 11 { EXCLUDED_KEYWORDS[t] } else { pool[t - 11] };
                kw.entry(format!("A{:06}", i)).or_default().insert(word.to_string());
            }
            let once = filter_corpus(records, &kw);
            let twice = filter_corpus(once.clone(), &kw);
            prop_assert_eq!(once, twice);
        }
    }
}
