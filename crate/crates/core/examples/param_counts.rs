//! Lists parameter counts for every size preset and model variant.
//!
//! cargo run --example param_counts

use intseq::model::{ModelConfig, Size, Variant};

fn main() {
    println!("{:<8} {:>14} {:>14} {:>14}", "size", "dual", "vanilla", "magnitude");
    for size in [Size::Small, Size::Middle, Size::Large] {
        let counts: Vec<String> = [Variant::DualStream, Variant::VanillaToken, Variant::MagnitudeOnly]
            .into_iter()
            .map(|v| format!("{:>14}", ModelConfig::preset(size, v).param_count()))
            .collect();
        println!("{:<8} {}", format!("{size:?}"), counts.join(" "));
    }
}
