//! Recovers integers from exact (noise-free) predictions in each solver mode.
//!
//! cargo run --release --example solve_query -- [integer ...]

use intseq::solver::{select_mode, solve_with, sigma_interval, SolverConfig, SolverQuery};
use num_bigint::BigInt;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let inputs = if args.is_empty() {
        vec!["-4242".into(), "987654321987".into(), "1234567890123456789012345".into()]
    } else {
        args
    };
    let config = SolverConfig::default();
    for s in inputs {
        let x: BigInt = s.parse()?;
        let q = SolverQuery::exact(&x, 0.1, 5);
        let interval = sigma_interval(q.mu, q.log_var)?;
        let width = interval.as_ref().map(|i| i.width());
        let r = solve_with(&q, &config)?;
        println!("target {x}");
        println!("  Δn {:?}, dispatch {:?}, solved by {:?}", width, width.as_ref().map(select_mode), r.mode);
        for (i, c) in r.candidates.iter().enumerate() {
            println!("  #{:<2} {:>30}  score {:.4}", i + 1, c.value, c.score);
        }
    }
    Ok(())
}
