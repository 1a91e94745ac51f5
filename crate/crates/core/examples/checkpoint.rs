//! Saves a model with its JSON sidecar and restores it.

use dynser::models::{build_model, InputDims, Model, ModelHyper, ModelInput, ModelVariant};
use dynser::{Mode, Result, Tensor};

fn main() -> Result<()> {
    let hyper = ModelHyper {
        channels: vec![4, 8],
        gru_hidden: 8,
        dense: 16,
        cbam_reduction: 4,
        input: InputDims { n_mfcc: 40, frames: 64, wave_samples: 1024 },
        ..ModelHyper::default()
    };
    let model = build_model(ModelVariant::DualStreamBiGru, &hyper, 11)?;
    let dir = std::env::temp_dir().join("dynser-checkpoint-example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("model.bin");
    model.save(&path)?;
    println!("saved {} parameters to {}", model.num_parameters(), path.display());

    let restored = Model::load(&path)?;
    let input = ModelInput {
        wave: Some(Tensor::from_fn(vec![1, 1, 1024], |i| (i as f64 * 0.01).sin())),
        mfcc: Some(Tensor::from_fn(vec![1, 1, 40, 64], |i| (i as f64 * 0.003).cos())),
    };
    let a = model.forward(&input, Mode::Eval)?;
    let b = restored.forward(&input, Mode::Eval)?;
    println!("variant {}, logits {:.4?}", restored.arch.variant, b.data());
    println!("identical outputs after reload: {}", a == b);
    Ok(())
}
