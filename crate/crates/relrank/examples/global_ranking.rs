//! Induce a global ordering from a trained model and compare it against
//! the generator's latent truth with Kendall tau.
//!
//!     cargo run --release --example global_ranking

use relrank::data::{self, SynthMode, SynthSpec};
use relrank::eval;
use relrank::linear;
use relrank::types::Split;

fn main() -> relrank::Result<()> {
    let spec = SynthSpec {
        n_ordered_pairs: 500,
        similarity_threshold: 1.2,
        seed: 11,
        ..SynthSpec::new(SynthMode::Linear, 10, 200)
    };
    let (dataset, truth) = data::generate(&spec)?;

    let train: Vec<_> = dataset.pairs_for(0, Some(Split::Train)).into_iter().cloned().collect();
    let model = linear::solve(
        &train,
        &dataset,
        &Default::default(),
        // loose tolerance: the summed objective is large at this pair count
        1e-4,
        linear::DEFAULT_MAX_ITERS,
    )?;

    let ids: Vec<String> = dataset.items.keys().cloned().collect();
    let scorer = |x: &relrank::types::FeatureVector| model.score(&x.values);
    let ranked = eval::rank_items(scorer, &ids, &dataset, true)?;
    println!("top five (normalized scores):");
    for (id, score) in ranked.iter().take(5) {
        println!("  {id}\t{score:.4}");
    }

    let scores: Vec<f64> = ids.iter().map(|id| model.score(&dataset.items[id].values)).collect::<relrank::Result<_>>()?;
    let latent: Vec<f64> = ids.iter().map(|id| truth.strengths[id]).collect();
    println!("kendall tau vs latent truth: {:.4}", eval::kendall_tau(&scores, &latent)?);
    Ok(())
}
