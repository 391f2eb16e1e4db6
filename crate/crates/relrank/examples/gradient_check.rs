//! Validate the hand-written backward pass against central finite
//! differences for both activations.
//!
//!     cargo run --example gradient_check

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use relrank::net::{self, Activation, DeepRankModel, NetArchitecture};

fn main() -> relrank::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for activation in [Activation::Tanh, Activation::ReLU] {
        let arch = NetArchitecture {
            input_dim: 12,
            hidden_dims: vec![16, 8],
            embedding_dim: 6,
            activation,
        };
        let model = DeepRankModel::init(&arch, 21)?;
        let a: Vec<f64> = (0..12).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..12).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let err = net::grad_check(&model, &a, &b, 1e-5)?;
        println!("{activation}: max relative error {err:.3e}");
    }
    Ok(())
}
