//! Representation learning beats a fixed linear scorer when the latent
//! strength is nonlinear in the features: compare the convex linear
//! solver against the deep model on the same nonlinear dataset.
//!
//!     cargo run --release --example nonlinear_benefit

use relrank::data::{self, SynthMode, SynthSpec};
use relrank::eval;
use relrank::linear;
use relrank::net::NetArchitecture;
use relrank::trainer::{self, TrainConfig};
use relrank::types::Split;

fn main() -> relrank::Result<()> {
    let spec = SynthSpec {
        n_ordered_pairs: 1000,
        n_test_ordered_pairs: 400,
        similarity_threshold: 1.2,
        seed: 9,
        ..SynthSpec::new(SynthMode::Nonlinear, 10, 500)
    };
    let (dataset, _) = data::generate(&spec)?;
    let attribute = dataset.attributes[0].clone();
    let train: Vec<_> = dataset.pairs_for(0, Some(Split::Train)).into_iter().cloned().collect();
    let test: Vec<_> = dataset.pairs_for(0, Some(Split::Test)).into_iter().cloned().collect();

    let linear_model = linear::solve(
        &train,
        &dataset,
        &Default::default(),
        // loose tolerance: the summed objective is large at this pair count
        1e-4,
        linear::DEFAULT_MAX_ITERS,
    )?;
    let linear_scorer = |x: &relrank::types::FeatureVector| linear_model.score(&x.values);
    let linear_report = eval::pairwise_accuracy(linear_scorer, &test, &dataset, "linear")?;
    println!("{linear_report}");

    let arch = NetArchitecture::new(dataset.dimension);
    let cfg = TrainConfig {
        epochs: 500,
        seed: 1,
        ..TrainConfig::default()
    };
    let (deep_model, _) = trainer::train(&dataset, &attribute, &arch, &cfg, None)?;
    let deep_scorer = |x: &relrank::types::FeatureVector| deep_model.score(&x.values);
    let deep_report = eval::pairwise_accuracy(deep_scorer, &test, &dataset, "deep")?;
    println!("{deep_report}");
    Ok(())
}
