//! Train the Siamese deep ranking network on synthetic data, log per-epoch
//! losses, and report test pairwise accuracy.
//!
//!     cargo run --release --example train_deep_model

use relrank::data::{self, SynthMode, SynthSpec};
use relrank::eval;
use relrank::net::NetArchitecture;
use relrank::trainer::{self, TrainConfig};
use relrank::types::Split;

fn main() -> relrank::Result<()> {
    let spec = SynthSpec {
        n_ordered_pairs: 500,
        n_test_ordered_pairs: 200,
        similarity_threshold: 1.2,
        seed: 1,
        ..SynthSpec::new(SynthMode::Linear, 10, 200)
    };
    let (dataset, _) = data::generate(&spec)?;
    let attribute = dataset.attributes[0].clone();

    let arch = NetArchitecture::new(dataset.dimension);
    let cfg = TrainConfig {
        epochs: 200,
        seed: 5,
        ..TrainConfig::default()
    };
    let mut log = std::io::stderr();
    let (model, history) = trainer::train(&dataset, &attribute, &arch, &cfg, Some(&mut log))?;
    println!(
        "epoch 0 mean loss {:.4}, final mean loss {:.4}",
        history.first().unwrap(),
        history.last().unwrap()
    );

    let test: Vec<_> = dataset.pairs_for(0, Some(Split::Test)).into_iter().cloned().collect();
    let scorer = |x: &relrank::types::FeatureVector| model.score(&x.values);
    let report = eval::pairwise_accuracy(scorer, &test, &dataset, &attribute.name)?;
    println!("{report}");
    Ok(())
}
