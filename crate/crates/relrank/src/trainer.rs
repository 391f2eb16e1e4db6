//! End-to-end training of the Siamese ranking network: mini-batch pair
//! sampling, the squared-hinge ranking loss over both branches, and an
//! RMSProp update. One independent model per attribute.
//!
//! A training run is single-threaded and deterministic given its seed.
//! Losses are summed, not averaged, within a batch, and only the ranking
//! weights carry the `1/2 ||w||^2` regularizer; hidden parameters are
//! unregularized unless `weight_decay_hidden` is set.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::net::{DeepRankModel, NetArchitecture, ParamSet, ParameterGradients};
use crate::types::{AttributeSpec, Dataset, LossConfig, Relation, Split};

/// Training hyperparameters. Defaults: learning rate 1e-5, batches of 48
/// pairs, RMSProp decay 0.9 with epsilon 1e-7, shuffling every epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub loss: LossConfig,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub optimizer_decay: f64,
    pub optimizer_epsilon: f64,
    pub seed: u64,
    pub shuffle_each_epoch: bool,
    pub weight_decay_hidden: f64,
    /// Additive Gaussian noise on features during training, the
    /// feature-space analog of image augmentation. Off by default.
    pub feature_jitter_sigma: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            loss: LossConfig::default(),
            learning_rate: 1e-5,
            batch_size: 48,
            epochs: 200,
            optimizer_decay: 0.9,
            optimizer_epsilon: 1e-7,
            seed: 0,
            shuffle_each_epoch: true,
            weight_decay_hidden: 0.0,
            feature_jitter_sigma: 0.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !(self.optimizer_decay > 0.0 && self.optimizer_decay < 1.0) {
            return Err(Error::Config(format!(
                "optimizer_decay must be in (0,1), got {}",
                self.optimizer_decay
            )));
        }
        if !(self.optimizer_epsilon > 0.0) {
            return Err(Error::Config(format!(
                "optimizer_epsilon must be positive, got {}",
                self.optimizer_epsilon
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be >= 1".into()));
        }
        if !(self.weight_decay_hidden >= 0.0 && self.feature_jitter_sigma >= 0.0) {
            return Err(Error::Config(
                "weight_decay_hidden and feature_jitter_sigma must be >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// Per-parameter accumulator of squared gradients, initialized to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub acc: ParamSet,
}

impl OptimizerState {
    pub fn new(model: &DeepRankModel) -> Self {
        OptimizerState {
            acc: ParamSet::zeros_like(model),
        }
    }
}

/// One training pair with its resolved feature vectors.
#[derive(Debug, Clone, Copy)]
pub struct TrainPair<'a> {
    pub relation: Relation,
    pub first: &'a [f64],
    pub second: &'a [f64],
}

/// Summed ranking loss of one batch and its gradients over every
/// parameter.
///
/// For each pair with score difference `s = w . (h(first) - h(second))`:
/// Ordered pairs contribute `c1 * max(0, 1 - s)^2`, Similar pairs
/// `c2 * s^2`, and the `1/2 ||w||^2` regularizer is added once per batch
/// (its gradient, `w`, touches the ranking weights only).
pub fn batch_loss(
    model: &DeepRankModel,
    batch: &[TrainPair<'_>],
    cfg: &LossConfig,
) -> Result<(f64, ParameterGradients)> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let mut grads = ParamSet::zeros_like(model);
    let w = &model.ranking_weights;
    let mut loss = 0.5 * w.iter().map(|v| v * v).sum::<f64>();
    grads.ranking.copy_from_slice(w);
    for pair in batch {
        let (s, cache) = model.pair_forward(pair.first, pair.second)?;
        let upstream = match pair.relation {
            Relation::Ordered => {
                let margin = 1.0 - s;
                if margin > 0.0 {
                    loss += cfg.c1 * margin * margin;
                    -2.0 * cfg.c1 * margin
                } else {
                    0.0
                }
            }
            Relation::Similar => {
                loss += cfg.c2 * s * s;
                2.0 * cfg.c2 * s
            }
        };
        if upstream != 0.0 {
            let pair_grads = model.pair_backward(&cache, upstream)?;
            for (acc, g) in grads.tensors_mut().into_iter().zip(pair_grads.tensors()) {
                for (a, v) in acc.iter_mut().zip(g) {
                    *a += v;
                }
            }
        }
    }
    Ok((loss, grads))
}

/// RMSProp update: `acc <- rho * acc + (1 - rho) * g^2`, then
/// `theta <- theta - lr * g / (sqrt(acc) + eps)`.
pub fn rmsprop_step(
    model: &mut DeepRankModel,
    grads: &ParameterGradients,
    state: &mut OptimizerState,
    cfg: &TrainConfig,
) -> Result<()> {
    let rho = cfg.optimizer_decay;
    let lr = cfg.learning_rate;
    let eps = cfg.optimizer_epsilon;
    let params = model.param_tensors_mut();
    let gs = grads.tensors();
    let accs = state.acc.tensors_mut();
    if params.len() != gs.len() {
        return Err(Error::LengthMismatch {
            left: params.len(),
            right: gs.len(),
        });
    }
    for ((theta, g), acc) in params.into_iter().zip(gs).zip(accs) {
        if theta.len() != g.len() {
            return Err(Error::LengthMismatch {
                left: theta.len(),
                right: g.len(),
            });
        }
        for ((t, gv), a) in theta.iter_mut().zip(g).zip(acc.iter_mut()) {
            *a = rho * *a + (1.0 - rho) * gv * gv;
            *t -= lr * gv / (a.sqrt() + eps);
        }
    }
    Ok(())
}

// splitmix64 finalizer; mixes (seed, epoch) into an independent stream seed
fn mix_seed(seed: u64, epoch: u64) -> u64 {
    let mut z = seed
        .wrapping_add(0x9E3779B97F4A7C15)
        .wrapping_add(epoch.wrapping_mul(0xBF58476D1CE4E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// The epoch-k shuffle permutation, a pure function of (seed, k).
pub fn epoch_permutation(seed: u64, epoch: usize, n: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, epoch as u64));
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng);
    perm
}

/// Trains one model for one attribute on the train-split pairs.
///
/// Per epoch: shuffle the pair list with the seeded generator, partition
/// into consecutive batches of `batch_size` (the final short batch is
/// kept), compute [`batch_loss`], apply [`rmsprop_step`]. Returns the
/// trained model and the per-epoch mean training loss. When `log` is
/// given, one line per epoch is written as `epoch <k> loss <value>
/// pairs <n>`.
pub fn train(
    dataset: &Dataset,
    attribute: &AttributeSpec,
    arch: &NetArchitecture,
    cfg: &TrainConfig,
    mut log: Option<&mut dyn Write>,
) -> Result<(DeepRankModel, Vec<f64>)> {
    cfg.validate()?;
    let pairs = dataset.pairs_for(attribute.index, Some(Split::Train));
    if pairs.is_empty() {
        return Err(Error::EmptyPairs);
    }
    // resolve features once
    let resolved: Vec<(Relation, &[f64], &[f64])> = pairs
        .iter()
        .map(|p| {
            Ok((
                p.relation,
                dataset.features(&p.first)?.values.as_slice(),
                dataset.features(&p.second)?.values.as_slice(),
            ))
        })
        .collect::<Result<_>>()?;

    let mut model = DeepRankModel::init(arch, cfg.seed)?;
    let mut state = OptimizerState::new(&model);
    let mut history = Vec::with_capacity(cfg.epochs);
    let jitter = if cfg.feature_jitter_sigma > 0.0 {
        Some(Normal::new(0.0, cfg.feature_jitter_sigma).expect("valid sigma"))
    } else {
        None
    };

    for epoch in 0..cfg.epochs {
        let order = if cfg.shuffle_each_epoch {
            epoch_permutation(cfg.seed, epoch, resolved.len())
        } else {
            (0..resolved.len()).collect()
        };
        let mut jitter_rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed ^ 0xA5A5_A5A5, epoch as u64));
        let mut epoch_loss = 0.0;
        let mut n_batches = 0usize;
        for (batch_idx, chunk) in order.chunks(cfg.batch_size).enumerate() {
            // owned storage for jittered features, if enabled
            let jittered: Vec<(Vec<f64>, Vec<f64>)> = match &jitter {
                Some(dist) => chunk
                    .iter()
                    .map(|&i| {
                        let (_, a, b) = resolved[i];
                        let noisy = |x: &[f64], rng: &mut ChaCha8Rng| {
                            x.iter().map(|v| v + dist.sample(rng)).collect::<Vec<f64>>()
                        };
                        (noisy(a, &mut jitter_rng), noisy(b, &mut jitter_rng))
                    })
                    .collect(),
                None => Vec::new(),
            };
            let batch: Vec<TrainPair<'_>> = chunk
                .iter()
                .enumerate()
                .map(|(k, &i)| {
                    let (relation, a, b) = resolved[i];
                    if jitter.is_some() {
                        TrainPair {
                            relation,
                            first: &jittered[k].0,
                            second: &jittered[k].1,
                        }
                    } else {
                        TrainPair {
                            relation,
                            first: a,
                            second: b,
                        }
                    }
                })
                .collect();
            let (loss, mut grads) = batch_loss(&model, &batch, &cfg.loss)?;
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss {
                    epoch,
                    batch: batch_idx,
                });
            }
            if cfg.weight_decay_hidden > 0.0 {
                for (gw, layer) in grads.layer_weights.iter_mut().zip(&model.layers) {
                    for (g, w) in gw.iter_mut().zip(&layer.weights) {
                        *g += cfg.weight_decay_hidden * w;
                    }
                }
                for (gb, layer) in grads.layer_biases.iter_mut().zip(&model.layers) {
                    for (g, b) in gb.iter_mut().zip(&layer.bias) {
                        *g += cfg.weight_decay_hidden * b;
                    }
                }
            }
            rmsprop_step(&mut model, &grads, &mut state, cfg)?;
            epoch_loss += loss;
            n_batches += 1;
        }
        let mean_loss = epoch_loss / n_batches.max(1) as f64;
        history.push(mean_loss);
        if let Some(out) = log.as_deref_mut() {
            writeln!(out, "epoch {epoch} loss {mean_loss} pairs {}", resolved.len())?;
        }
    }
    Ok((model, history))
}
