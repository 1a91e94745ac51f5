//! Generates the synthetic corpus, caches features, and runs 5-fold
//! cross-validation of a narrow Proposed network.
//!
//! `cargo run --release --example cross_validation -- [epochs]`

use dynser::audio::MfccConfig;
use dynser::data::{extract_features, gen_fixtures, load_dataset, Streams};
use dynser::models::{ModelHyper, ModelVariant};
use dynser::train::{cross_validate, TrainConfig};
use dynser::Result;

fn main() -> Result<()> {
    let epochs = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(10);
    let root = std::env::temp_dir().join("dynser-cv-example");
    let manifest = gen_fixtures(&root, 42, 50)?;
    let audio = MfccConfig::default();
    let summary = extract_features(&manifest, &audio, &root.join("cache"))?;
    println!("features: {} written, {} cached", summary.written, summary.skipped);
    let data = load_dataset(&manifest, &audio, &root.join("cache"), Streams { mfcc: true, wave: false })?;

    let hyper = ModelHyper {
        channels: vec![4, 8, 16, 16],
        gru_hidden: 16,
        dense: 32,
        cbam_reduction: 4,
        ..ModelHyper::default()
    };
    let cfg = TrainConfig { epochs, batch_size: 16, seed: 42, eval_every: epochs.max(1), ..TrainConfig::default() };
    let report = cross_validate(ModelVariant::Proposed, &hyper, &data, &cfg)?;
    for f in &report.folds {
        println!("fold {}: UA {:.3} WA {:.3} ({:.1} s)", f.fold, f.metrics.ua, f.metrics.wa, f.seconds);
    }
    println!("mean UA {:.3} WA {:.3} macro-F1 {:.3}", report.mean.ua, report.mean.wa, report.mean.macro_f1);
    println!("pooled confusion:\n{}", report.pooled.confusion.render());
    Ok(())
}
