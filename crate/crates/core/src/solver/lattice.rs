//! Anchor moduli, the residue beam, and Chinese remaindering.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use crate::featurizer::{modulus_at, NUM_MODULI};

/// Modular inverse of `a` modulo `m` (requires `gcd(a, m) = 1`).
pub fn mod_inverse(a: u64, m: u64) -> Option<u64> {
    let g = (a as i128).extended_gcd(&(m as i128));
    (g.gcd == 1).then(|| g.x.rem_euclid(m as i128) as u64)
}

/// The unique `x ∈ [0, M)` with `x ≡ r_i (mod m_i)` for pairwise coprime
/// moduli, together with `M = Π m_i`.
///
/// # Panics
/// If two moduli share a factor.
pub fn crt(congruences: &[(u64, u64)]) -> (BigInt, BigInt) {
    let mut x = BigInt::zero();
    let mut modulus = BigInt::one();
    for &(r, m) in congruences {
        let m_big = BigInt::from(m);
        let big_mod_m = (&modulus % &m_big).to_u64().expect("reduced below m");
        let inv = mod_inverse(big_mod_m, m).expect("anchor moduli must be pairwise coprime");
        let x_mod_m = (&x % &m_big).to_u64().expect("reduced below m");
        let diff = (r % m + m - x_mod_m) % m;
        let t = (u128::from(diff) * u128::from(inv) % u128::from(m)) as u64;
        x += &modulus * t;
        modulus *= m;
    }
    (x, modulus)
}

/// Greedy anchor selection: moduli ordered by their largest residue
/// probability (descending, ties by ascending modulus) are accepted when that
/// probability reaches `threshold` and they are coprime to every anchor so far.
/// Stops as soon as the product reaches `target`.
pub fn select_anchors(residue_probs: &[Vec<f64>], threshold: f64, target: &BigInt) -> Vec<u32> {
    let mut order: Vec<(f64, u32)> = (0..NUM_MODULI)
        .map(|i| (residue_probs[i].iter().cloned().fold(f64::NEG_INFINITY, f64::max), modulus_at(i)))
        .collect();
    order.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut anchors = Vec::new();
    let mut product = BigInt::one();
    for (p, m) in order {
        if &product >= target {
            break;
        }
        if p < threshold {
            break;
        }
        if anchors.iter().all(|&a: &u32| a.gcd(&m) == 1) {
            anchors.push(m);
            product *= m;
        }
    }
    anchors
}

/// A partial assignment of residues to the anchors.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamState {
    pub log_prob: f64,
    pub residues: Vec<u32>,
}

/// Indices of the `k` most probable residues (ties by ascending residue),
/// skipping residues of probability zero.
pub fn top_residues(dist: &[f64], k: usize) -> Vec<u32> {
    let mut idx: Vec<u32> = (0..dist.len() as u32).filter(|&r| dist[r as usize] > 0.0).collect();
    idx.sort_by(|&a, &b| dist[b as usize].total_cmp(&dist[a as usize]).then(a.cmp(&b)));
    idx.truncate(k);
    idx
}

/// Beam search over residue combinations of `anchors`, keeping `width` states
/// ranked by cumulative log-probability (ties by residue vector).
pub fn residue_beam(residue_probs: &[Vec<f64>], anchors: &[u32], per_anchor: usize, width: usize) -> Vec<BeamState> {
    let mut beam = vec![BeamState { log_prob: 0.0, residues: Vec::new() }];
    for &m in anchors {
        let dist = &residue_probs[(m - modulus_at(0)) as usize];
        let choices = top_residues(dist, per_anchor);
        let mut next = Vec::with_capacity(beam.len() * choices.len());
        for state in &beam {
            for &r in &choices {
                let mut residues = state.residues.clone();
                residues.push(r);
                let lp = dist[r as usize].max(super::score::PROB_FLOOR).ln();
                next.push(BeamState { log_prob: state.log_prob + lp, residues });
            }
        }
        next.sort_by(|a, b| b.log_prob.total_cmp(&a.log_prob).then_with(|| a.residues.cmp(&b.residues)));
        next.truncate(width.max(1));
        beam = next;
    }
    beam
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crt_small_example() {
        let (x, m) = crt(&[(2, 3), (3, 5)]);
        assert_eq!((x, m), (BigInt::from(8), BigInt::from(15)));
        let brute = (0..15).find(|x| x % 3 == 2 && x % 5 == 3).unwrap();
        assert_eq!(brute, 8);
    }

    #[test]
    fn crt_matches_brute_force() {
        let moduli = [4u64, 9, 5, 7];
        for x in 0..(4 * 9 * 5 * 7) {
            let c: Vec<(u64, u64)> = moduli.iter().map(|&m| (x % m, m)).collect();
            assert_eq!(crt(&c).0, BigInt::from(x));
        }
    }

    #[test]
    fn inverse() {
        assert_eq!(mod_inverse(3, 7), Some(5));
        assert_eq!(mod_inverse(4, 8), None);
        assert_eq!(mod_inverse(0, 1), Some(0));
    }

    #[test]
    fn anchors_are_coprime_and_ordered() {
        let mut probs: Vec<Vec<f64>> = (0..NUM_MODULI).map(|i| vec![1.0 / f64::from(modulus_at(i)); modulus_at(i) as usize]).collect();
        for (i, p) in [(4usize, 0.99), (2, 0.95), (0, 0.95), (8, 0.97)] {
            let m = modulus_at(i) as usize;
            probs[i] = vec![(1.0 - p) / (m - 1) as f64; m];
            probs[i][1] = p;
        }
        // max probs: m=6 0.99, m=10 0.97, m=2 0.95, m=4 0.95
        let anchors = select_anchors(&probs, 0.9, &BigInt::from(10u64.pow(9)));
        assert_eq!(anchors, vec![6]);
        let anchors = select_anchors(&probs, 0.5, &BigInt::from(1));
        assert!(anchors.is_empty());
        let anchors = select_anchors(&probs, 0.9, &BigInt::from(7));
        assert_eq!(anchors, vec![6]);
    }

    #[test]
    fn beam_of_width_one_takes_argmax() {
        let probs: Vec<Vec<f64>> = (0..NUM_MODULI)
            .map(|i| {
                let m = modulus_at(i) as usize;
                let mut d = vec![0.1 / (m - 1) as f64; m];
                d[m - 1] = 0.9;
                d
            })
            .collect();
        let beam = residue_beam(&probs, &[3, 5, 7], 2, 1);
        assert_eq!(beam.len(), 1);
        assert_eq!(beam[0].residues, vec![2, 4, 6]);
        let wide = residue_beam(&probs, &[3, 5, 7], 2, 64);
        assert_eq!(wide.len(), 8);
        assert_eq!(wide[0].residues, vec![2, 4, 6]);
    }
}
