//! Generate a synthetic relative-attribute dataset with known latent
//! strengths and write it to the feature/pair/truth file formats.
//!
//!     cargo run --example synthesize_dataset

use relrank::data::{self, SynthMode, SynthSpec};

fn main() -> relrank::Result<()> {
    let spec = SynthSpec {
        n_ordered_pairs: 300,
        n_similar_pairs: 50,
        n_test_ordered_pairs: 100,
        similarity_threshold: 0.1,
        seed: 7,
        ..SynthSpec::new(SynthMode::Linear, 10, 150)
    };
    let (dataset, truth) = data::generate(&spec)?;

    let dir = std::env::temp_dir().join("relrank-example-synth");
    std::fs::create_dir_all(&dir)?;
    data::save_features(&dir.join("features.csv"), &dataset.items)?;
    data::save_pairs(&dir.join("pairs.tsv"), &dataset.attributes, &dataset.pairs)?;
    data::save_truth(&dir.join("truth.csv"), &truth)?;

    println!("latent function: {}", truth.description);
    println!(
        "{} items, {} train / {} test pairs written to {}",
        dataset.items.len(),
        dataset.pairs_for(0, Some(relrank::types::Split::Train)).len(),
        dataset.pairs_for(0, Some(relrank::types::Split::Test)).len(),
        dir.display()
    );

    // the files round-trip exactly
    let (reloaded, _) = data::load_dataset(&dir.join("features.csv"), &dir.join("pairs.tsv"))?;
    assert_eq!(dataset, reloaded);
    println!("round-trip check passed");
    Ok(())
}
