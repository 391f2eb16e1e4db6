//! Attribute a model's ranking score to input features via the gradient
//! of the score with respect to the input.
//!
//!     cargo run --release --example input_attribution

use relrank::data::{self, SynthMode, SynthSpec};
use relrank::eval;
use relrank::net::NetArchitecture;
use relrank::trainer::{self, TrainConfig};

fn main() -> relrank::Result<()> {
    // only the first three feature dimensions carry signal here: the
    // latent direction of a linear dataset restricted by construction
    let spec = SynthSpec {
        n_ordered_pairs: 400,
        seed: 23,
        ..SynthSpec::new(SynthMode::Linear, 6, 150)
    };
    let (dataset, _) = data::generate(&spec)?;
    let attribute = dataset.attributes[0].clone();

    let arch = NetArchitecture {
        hidden_dims: vec![32],
        embedding_dim: 16,
        ..NetArchitecture::new(dataset.dimension)
    };
    let cfg = TrainConfig {
        epochs: 150,
        seed: 4,
        ..TrainConfig::default()
    };
    let (model, _) = trainer::train(&dataset, &attribute, &arch, &cfg, None)?;

    let id = dataset.items.keys().next().unwrap().clone();
    let attribution = eval::input_attribution(&model, &dataset.items[&id])?;
    println!("attribution for {id}:");
    for (k, v) in attribution.iter().enumerate() {
        println!("  feature {k}: {v:+.5}");
    }
    Ok(())
}
