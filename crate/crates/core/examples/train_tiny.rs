//! Overfits a small model on the bundled 64-sequence fixture and reports
//! training-set accuracy.
//!
//! cargo run --release --example train_tiny -- [epochs] [dual|ablation|vanilla] [lr] [batch_size] [mask_p]

use std::path::PathBuf;
use std::time::Instant;

use intseq::corpus::{filter_corpus, parse_keywords_file, parse_stripped_file, MAX_PREFIX};
use intseq::model::{Model, ModelConfig, Variant};
use intseq::trainer::{Dataset, EpochRecord, TrainConfig, TrainError, TrainObserver, Trainer};

struct Progress(Instant);

impl TrainObserver for Progress {
    fn on_epoch(&mut self, r: &EpochRecord, _: &Trainer, _: bool) -> Result<(), TrainError> {
        if r.epoch.is_multiple_of(25) {
            println!(
                "epoch {:>4}  loss {:.4}  mag_acc {:.3}  mma {:.3}  ({:.0}s)",
                r.epoch,
                r.train.total,
                r.val_mag_acc.unwrap_or(f64::NAN),
                r.val_mma.unwrap_or(f64::NAN),
                self.0.elapsed().as_secs_f64()
            );
        }
        Ok(())
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let epochs = args.first().map_or(Ok(800), |s| s.parse())?;
    let variant: Variant = args.get(1).map_or(Ok(Variant::DualStream), |s| s.parse())?;
    let lr = args.get(2).map_or(Ok(2e-3), |s| s.parse())?;
    let batch_size = args.get(3).map_or(Ok(8), |s| s.parse())?;
    let mask_p = args.get(4).map_or(Ok(0.5), |s| s.parse())?;

    let data = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data");
    let records = filter_corpus(parse_stripped_file(&data.join("stripped"))?, &parse_keywords_file(&data.join("keywords"))?);
    println!("{} sequences after filtering", records.len());
    let train = Dataset::from_records(&records, MAX_PREFIX);

    let model = Model::new(ModelConfig::new(variant, 4, 128, 4).with_dropout(0.0), 42)?;
    let config = TrainConfig { epochs, batch_size, grad_accum: 1, lr, mask_p, seed: 42, ..TrainConfig::default() };
    let mut trainer = Trainer::new(model, config)?;
    trainer.fit(&train, &train, &mut Progress(Instant::now()))?;
    let v = trainer.validate(&train, epochs);
    println!(
        "final: loss {:.4}  mag_acc {:.4}  sign_acc {:.4}  mma {:.4}",
        v.loss.total,
        v.metrics.mag_acc(),
        v.metrics.sign_acc(),
        v.metrics.mma()
    );
    Ok(())
}
