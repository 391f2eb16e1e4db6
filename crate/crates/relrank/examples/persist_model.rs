//! Save a model to the self-describing text format and reload it; the
//! round trip is bit-exact.
//!
//!     cargo run --example persist_model

use relrank::net::{Activation, DeepRankModel, NetArchitecture};

fn main() -> relrank::Result<()> {
    let arch = NetArchitecture {
        input_dim: 8,
        hidden_dims: vec![16, 8],
        embedding_dim: 4,
        activation: Activation::Tanh,
    };
    let model = DeepRankModel::init(&arch, 123)?;

    let path = std::env::temp_dir().join("relrank-example.model");
    model.save_to_path(&path)?;
    let reloaded = DeepRankModel::load_from_path(&path)?;
    assert_eq!(model, reloaded);

    let text = std::fs::read_to_string(&path)?;
    println!("model file header:");
    for line in text.lines().take(5) {
        println!("  {line}");
    }
    println!("round trip exact: {} bytes at {}", text.len(), path.display());
    Ok(())
}
