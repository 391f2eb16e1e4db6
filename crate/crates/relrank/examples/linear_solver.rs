//! Fit the convex linear rank-SVM on synthetic linear data and compare
//! against the known latent direction.
//!
//!     cargo run --example linear_solver

use relrank::data::{self, SynthMode, SynthSpec};
use relrank::eval;
use relrank::linear;
use relrank::types::Split;

fn main() -> relrank::Result<()> {
    let spec = SynthSpec {
        n_ordered_pairs: 400,
        n_test_ordered_pairs: 150,
        seed: 3,
        ..SynthSpec::new(SynthMode::Linear, 8, 120)
    };
    let (dataset, _) = data::generate(&spec)?;

    let train: Vec<_> = dataset.pairs_for(0, Some(Split::Train)).into_iter().cloned().collect();
    let model = linear::solve(
        &train,
        &dataset,
        &Default::default(),
        // the objective is large at this pair count, so a tight gradient
        // tolerance is below the line search's numerical floor
        1e-4,
        linear::DEFAULT_MAX_ITERS,
    )?;
    println!("objective at optimum: {:.6}", model.training_objective);

    let test: Vec<_> = dataset.pairs_for(0, Some(Split::Test)).into_iter().cloned().collect();
    let scorer = |x: &relrank::types::FeatureVector| model.score(&x.values);
    let report = eval::pairwise_accuracy(scorer, &test, &dataset, "strength")?;
    println!("{report}");
    Ok(())
}
