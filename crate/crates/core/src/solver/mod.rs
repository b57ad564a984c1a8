//! Turns a position's prediction bundle into ranked integer candidates.
//!
//! The magnitude prediction fixes a 3σ interval of absolute values. Narrow
//! intervals are enumerated exhaustively ([`SolverMode::Dense`]); wider ones
//! are searched on residue lattices built from high-confidence, pairwise
//! coprime "anchor" moduli ([`SolverMode::Sieve`], [`SolverMode::Crt`]).

mod interval;
mod lattice;
mod score;

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use interval::{
    pow10_ceil, pow10_floor, pow10_round, select_mode, sigma_interval, SearchInterval, DENSE_MAX_WIDTH, MAX_DIGITS,
    SIEVE_MAX_WIDTH,
};
pub use lattice::{crt, mod_inverse, residue_beam, select_anchors, top_residues, BeamState};
pub use score::{score_candidate, Scorer, MOD_WEIGHT, PROB_FLOOR, VARIANCE_FLOOR};

use crate::featurizer::{magnitude_value, magnitude_value_u64, modulus_at, residues, SignClass, NUM_MODULI};
use crate::model::PositionPrediction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverMode {
    Zero,
    Dense,
    Sieve,
    Crt,
    None,
}

impl SolverMode {
    pub const ALL: [SolverMode; 5] =
        [SolverMode::Zero, SolverMode::Dense, SolverMode::Sieve, SolverMode::Crt, SolverMode::None];
}

impl fmt::Display for SolverMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolverMode::Zero => "zero",
            SolverMode::Dense => "dense",
            SolverMode::Sieve => "sieve",
            SolverMode::Crt => "crt",
            SolverMode::None => "none",
        })
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SolverError {
    #[error("search interval too large: upper exponent {exponent:.3e} exceeds {MAX_DIGITS:e} digits")]
    IntervalTooLarge { exponent: f64 },
    #[error("invalid query: {0}")]
    InvalidQuery(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverQuery {
    pub mu: f64,
    pub log_var: f64,
    pub sign_probs: [f64; 3],
    /// One distribution per modulus `m = 2..=101`, of length `m`.
    pub residue_probs: Vec<Vec<f64>>,
    pub k: usize,
}

impl SolverQuery {
    pub fn from_prediction(pred: &PositionPrediction, k: usize) -> Self {
        Self {
            mu: pred.mu,
            log_var: pred.log_var,
            sign_probs: pred.sign_probs(),
            residue_probs: pred.residue_probs(),
            k,
        }
    }

    /// The query a perfect model would emit for `x`: `μ = v(x)`, the given
    /// σ, a one-hot sign and one-hot residues.
    pub fn exact(x: &BigInt, sigma: f64, k: usize) -> Self {
        let mut sign_probs = [0.0; 3];
        sign_probs[SignClass::of(x).index()] = 1.0;
        let res = residues(x);
        let residue_probs = (0..NUM_MODULI)
            .map(|i| {
                let mut d = vec![0.0; modulus_at(i) as usize];
                d[res[i] as usize] = 1.0;
                d
            })
            .collect();
        Self { mu: magnitude_value(x), log_var: 2.0 * sigma.ln(), sign_probs, residue_probs, k }
    }

    pub fn sigma(&self) -> f64 {
        (self.log_var / 2.0).exp()
    }

    /// Predicted sign: argmax of `sign_probs`, ties to the lower class index.
    pub fn sign(&self) -> SignClass {
        SignClass::from_index(crate::analytics::argmax(&self.sign_probs))
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |msg: String| Err(SolverError::InvalidQuery(msg));
        if self.k == 0 {
            return bad("k must be at least 1".into());
        }
        if !self.mu.is_finite() || !self.log_var.is_finite() {
            return bad("magnitude prediction must be finite".into());
        }
        let check = |name: &str, d: &[f64]| -> Result<(), SolverError> {
            let sum: f64 = d.iter().sum();
            if d.iter().any(|p| !(*p >= 0.0)) || (sum - 1.0).abs() > 1e-6 {
                return Err(SolverError::InvalidQuery(format!("{name} is not a distribution (sum {sum})")));
            }
            Ok(())
        };
        check("sign_probs", &self.sign_probs)?;
        if self.residue_probs.len() != NUM_MODULI {
            return bad(format!("expected {NUM_MODULI} residue distributions"));
        }
        for (i, d) in self.residue_probs.iter().enumerate() {
            let m = modulus_at(i);
            if d.len() != m as usize {
                return bad(format!("residue distribution for m={m} has length {}", d.len()));
            }
            check(&format!("residue_probs[m={m}]"), d)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    #[serde(with = "decimal")]
    pub value: BigInt,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverResult {
    pub mode: SolverMode,
    pub candidates: Vec<Candidate>,
    pub interval: Option<SearchInterval>,
}

impl SolverResult {
    fn none(interval: Option<SearchInterval>) -> Self {
        Self { mode: SolverMode::None, candidates: Vec::new(), interval }
    }

    pub fn top1(&self) -> Option<&BigInt> {
        self.candidates.first().map(|c| &c.value)
    }

    /// Whether `x` is among the first `k` candidates.
    pub fn hit_at(&self, x: &BigInt, k: usize) -> bool {
        self.candidates.iter().take(k).any(|c| &c.value == x)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub beam_width: usize,
    pub anchor_threshold: f64,
    pub fallback_threshold: f64,
    /// Residue alternatives per anchor in the beam.
    pub residues_per_anchor: usize,
    /// Upper bound on candidates scored in Sieve mode.
    pub candidate_cap: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            beam_width: 64,
            anchor_threshold: 0.9,
            fallback_threshold: 0.5,
            residues_per_anchor: 2,
            candidate_cap: 1_000_000,
        }
    }
}

/// Ranking order: score descending, then value ascending.
pub fn rank_order(a: &Candidate, b: &Candidate) -> Ordering {
    b.score.total_cmp(&a.score).then_with(|| a.value.cmp(&b.value))
}

fn top_k(mut cands: Vec<Candidate>, k: usize) -> Vec<Candidate> {
    if cands.len() > k {
        cands.select_nth_unstable_by(k - 1, rank_order);
        cands.truncate(k);
    }
    cands.sort_by(rank_order);
    cands
}

fn signed(n: BigInt, sign: SignClass) -> BigInt {
    if sign == SignClass::Negative {
        -n
    } else {
        n
    }
}

/// Solves with the default configuration.
pub fn solve(query: &SolverQuery) -> Result<SolverResult, SolverError> {
    solve_with(query, &SolverConfig::default())
}

pub fn solve_with(query: &SolverQuery, config: &SolverConfig) -> Result<SolverResult, SolverError> {
    query.validate()?;
    let sign = query.sign();
    if sign == SignClass::Zero {
        return Ok(SolverResult {
            mode: SolverMode::Zero,
            candidates: vec![Candidate { value: BigInt::zero(), score: 0.0 }],
            interval: None,
        });
    }
    let Some(interval) = sigma_interval(query.mu, query.log_var)? else {
        return Ok(SolverResult::none(None));
    };
    let scorer = Scorer::new(query);
    let mode = select_mode(&interval.width());
    let candidates = match mode {
        SolverMode::Dense => dense_candidates(&scorer, &interval, sign, query.k),
        SolverMode::Sieve => sieve_candidates(&scorer, query, &interval, sign, config),
        _ => crt_candidates(&scorer, query, &interval, sign, config),
    };
    Ok(match candidates {
        Some(c) if !c.is_empty() => SolverResult { mode, candidates: top_k(c, query.k), interval: Some(interval) },
        _ => SolverResult::none(Some(interval)),
    })
}

/// Scores every integer of the interval, updating residues incrementally.
fn dense_candidates(scorer: &Scorer, interval: &SearchInterval, sign: SignClass, k: usize) -> Option<Vec<Candidate>> {
    let width = interval.width().to_u64()?;
    let negative = sign == SignClass::Negative;
    let moduli: Vec<u32> = (0..NUM_MODULI).map(modulus_at).collect();
    // Residues of the signed candidate, advanced by ∓1 per step.
    let mut res: Vec<u32> = residues(&signed(interval.n_min.clone(), sign)).iter().map(|&r| u32::from(r)).collect();
    let advance = |res: &mut [u32]| {
        for (r, &m) in res.iter_mut().zip(&moduli) {
            *r = if negative {
                if *r == 0 {
                    m - 1
                } else {
                    *r - 1
                }
            } else if *r + 1 == m {
                0
            } else {
                *r + 1
            };
        }
    };
    let mut scored: Vec<(f64, u64)> = Vec::with_capacity(width as usize + 1);
    match interval.n_max.to_u64() {
        Some(_) => {
            let start = interval.n_min.to_u64().expect("n_min ≤ n_max");
            for off in 0..=width {
                let n = start + off;
                scored.push((scorer.combine(magnitude_value_u64(n), scorer.modulo_term(&res)), off));
                advance(&mut res);
            }
        }
        None => {
            let mut n = interval.n_min.clone();
            for off in 0..=width {
                scored.push((scorer.combine(magnitude_value(&n), scorer.modulo_term(&res)), off));
                advance(&mut res);
                n += 1u32;
            }
        }
    }
    // Within one sign, ties on score resolve to the smaller offset.
    let order = |a: &(f64, u64), b: &(f64, u64)| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1));
    if scored.len() > k {
        scored.select_nth_unstable_by(k - 1, order);
        scored.truncate(k);
    }
    scored.sort_by(order);
    Some(
        scored
            .into_iter()
            .map(|(score, off)| Candidate { value: signed(&interval.n_min + off, sign), score })
            .collect(),
    )
}

/// Anchors for `target`, retrying at the fallback threshold.
fn anchors_for(query: &SolverQuery, config: &SolverConfig, target: &BigInt) -> Vec<u32> {
    let anchors = select_anchors(&query.residue_probs, config.anchor_threshold, target);
    if anchors.is_empty() {
        select_anchors(&query.residue_probs, config.fallback_threshold, target)
    } else {
        anchors
    }
}

/// Lattice offsets `n0 ∈ [0, M)` in absolute-value space for every beam state.
fn lattice_offsets(query: &SolverQuery, anchors: &[u32], config: &SolverConfig, sign: SignClass) -> (Vec<BigInt>, BigInt) {
    let beam = residue_beam(&query.residue_probs, anchors, config.residues_per_anchor, config.beam_width);
    let mut modulus = BigInt::one();
    let mut offsets = Vec::with_capacity(beam.len());
    for state in &beam {
        let congruences: Vec<(u64, u64)> =
            state.residues.iter().zip(anchors).map(|(&r, &m)| (u64::from(r), u64::from(m))).collect();
        let (x0, m) = crt(&congruences);
        // A negative candidate −n has residue r exactly when n ≡ −r.
        let n0 = if sign == SignClass::Negative { (&m - &x0) % &m } else { x0 };
        offsets.push(n0);
        modulus = m;
    }
    (offsets, modulus)
}

fn ceil_div(a: &BigInt, b: &BigInt) -> BigInt {
    a.div_ceil(b)
}

/// Lattice indices `t` with `n0 + tM` inside the interval.
fn lattice_range(n0: &BigInt, m: &BigInt, interval: &SearchInterval) -> Option<(BigInt, BigInt)> {
    let lo = ceil_div(&(&interval.n_min - n0), m);
    let hi = (&interval.n_max - n0).div_floor(m);
    (lo <= hi).then_some((lo, hi))
}

fn score_all(scorer: &Scorer, ns: impl IntoIterator<Item = BigInt>, sign: SignClass) -> Vec<Candidate> {
    ns.into_iter()
        .map(|n| {
            let value = signed(n, sign);
            Candidate { score: scorer.score(&value), value }
        })
        .collect()
}

/// Outward walk over one state's lattice in order of `|v − μ|`.
struct NearestWalk {
    n0: BigInt,
    left: Option<BigInt>,
    right: Option<BigInt>,
    lo: BigInt,
    hi: BigInt,
}

impl NearestWalk {
    fn value(&self, m: &BigInt, t: &BigInt) -> BigInt {
        &self.n0 + t * m
    }

    fn dist(&self, m: &BigInt, t: &BigInt, mu: f64) -> f64 {
        (magnitude_value(&self.value(m, t)) - mu).abs()
    }

    /// Next lattice index, closer side first (ties to the smaller value).
    fn next(&mut self, m: &BigInt, mu: f64) -> Option<(f64, BigInt)> {
        let dl = self.left.as_ref().map(|t| self.dist(m, t, mu));
        let dr = self.right.as_ref().map(|t| self.dist(m, t, mu));
        let take_left = match (dl, dr) {
            (Some(a), Some(b)) => a <= b,
            (Some(_), None) => true,
            (None, Some(_)) => false,
            (None, None) => return None,
        };
        if take_left {
            let t = self.left.take().expect("left present");
            self.left = (t > self.lo).then(|| &t - 1);
            Some((dl.expect("left distance"), t))
        } else {
            let t = self.right.take().expect("right present");
            self.right = (t < self.hi).then(|| &t + 1);
            Some((dr.expect("right distance"), t))
        }
    }
}

#[derive(PartialEq)]
struct HeapEntry {
    dist: f64,
    state: usize,
    t: BigInt,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist.total_cmp(&other.dist).then(self.state.cmp(&other.state)).then_with(|| self.t.cmp(&other.t))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Anchors until `M ≥ Δn`, then every lattice point of every beam state inside
/// the interval; above the cap, the points with `v` nearest `μ` are kept.
fn sieve_candidates(
    scorer: &Scorer,
    query: &SolverQuery,
    interval: &SearchInterval,
    sign: SignClass,
    config: &SolverConfig,
) -> Option<Vec<Candidate>> {
    let anchors = anchors_for(query, config, &interval.width());
    if anchors.is_empty() {
        return None;
    }
    let (offsets, m) = lattice_offsets(query, &anchors, config, sign);
    let ranges: Vec<Option<(BigInt, BigInt)>> = offsets.iter().map(|n0| lattice_range(n0, &m, interval)).collect();
    let total: BigInt = ranges.iter().flatten().map(|(lo, hi)| hi - lo + 1).sum();
    let cap = config.candidate_cap;
    if total <= BigInt::from(cap) {
        let mut ns = Vec::new();
        for (n0, range) in offsets.iter().zip(&ranges) {
            if let Some((lo, hi)) = range {
                let mut t = lo.clone();
                while &t <= hi {
                    ns.push(n0 + &t * &m);
                    t += 1;
                }
            }
        }
        return Some(score_all(scorer, ns, sign));
    }

    let n_star = pow10_round(query.mu - 1.0);
    let mut walks: Vec<NearestWalk> = Vec::new();
    let mut heap = BinaryHeap::new();
    for (n0, range) in offsets.iter().zip(ranges) {
        let Some((lo, hi)) = range else { continue };
        let split = ceil_div(&(&n_star - n0), &m);
        let right = (split <= hi).then(|| split.clone().max(lo.clone()));
        let left = (split > lo).then(|| (&split - BigInt::one()).min(hi.clone()));
        let mut walk = NearestWalk { n0: n0.clone(), left, right, lo, hi };
        if let Some((dist, t)) = walk.next(&m, query.mu) {
            heap.push(Reverse(HeapEntry { dist, state: walks.len(), t }));
        }
        walks.push(walk);
    }
    let mut ns = Vec::with_capacity(cap);
    while ns.len() < cap {
        let Some(Reverse(entry)) = heap.pop() else { break };
        ns.push(walks[entry.state].value(&m, &entry.t));
        if let Some((dist, t)) = walks[entry.state].next(&m, query.mu) {
            heap.push(Reverse(HeapEntry { dist, state: entry.state, t }));
        }
    }
    Some(score_all(scorer, ns, sign))
}

/// Anchors until `M ≥ 10^μ`; per beam state the lattice points nearest
/// `10^(μ−1)` (`t*` and `t* ± 1`) that fall inside the interval.
fn crt_candidates(
    scorer: &Scorer,
    query: &SolverQuery,
    interval: &SearchInterval,
    sign: SignClass,
    config: &SolverConfig,
) -> Option<Vec<Candidate>> {
    let anchors = anchors_for(query, config, &pow10_ceil(query.mu));
    if anchors.is_empty() {
        return None;
    }
    let (offsets, m) = lattice_offsets(query, &anchors, config, sign);
    let n_star = pow10_round(query.mu - 1.0);
    let two = BigInt::from(2);
    let mut ns = Vec::new();
    for n0 in &offsets {
        // Nearest lattice index to n*, rounding half up.
        let t_star: BigInt = (&two * (&n_star - n0) + &m).div_floor(&(&two * &m));
        for dt in [-1i32, 0, 1] {
            let n = n0 + (&t_star + dt) * &m;
            if n.is_positive() && interval.contains(&n) {
                ns.push(n);
            }
        }
    }
    Some(score_all(scorer, ns, sign))
}

/// Serde adapter writing big integers as decimal strings.
pub mod decimal {
    use num_bigint::BigInt;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &BigInt, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&x.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigInt, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
