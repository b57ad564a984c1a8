//! Prints the magnitude, sign and residue features of a few integers.
//!
//! cargo run --example featurize -- 12345 -7 0 1000000000000000000000000000000

use intseq::featurizer::{magnitude_features, residues, unit_circle, SignClass};
use num_bigint::BigInt;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let inputs = if args.is_empty() { vec!["12345".into(), "-7".into(), "0".into()] } else { args };
    for s in inputs {
        let x: BigInt = s.parse()?;
        let mag = magnitude_features(&x);
        let res = residues(&x);
        println!("x = {x}");
        println!("  sign class {:?}, magnitude features {:?}", SignClass::of(&x), mag.to_array());
        let shown: Vec<String> = [2u32, 3, 5, 7, 10, 101]
            .iter()
            .map(|&m| {
                let r = u32::from(res[(m - 2) as usize]);
                let [s, c] = unit_circle(r, m);
                format!("mod {m}: {r} ({s:+.3}, {c:+.3})")
            })
            .collect();
        println!("  {}", shown.join(", "));
    }
    Ok(())
}
