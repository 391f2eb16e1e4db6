//! Siamese feed-forward network with hand-written forward and backward
//! passes.
//!
//! Both branches share a single parameter set; there is no second copy to
//! desynchronize. Each branch maps an input vector through the hidden
//! layers to an embedding (the final layer is linear, no activation), and
//! the bias-free ranking weights turn an embedding into a scalar score.
//! The pair output is the score difference, computed as one subtraction of
//! the two branch embeddings so that swapping the inputs negates it
//! exactly.
//!
//! All arithmetic is f64. Models are immutable during inference and safe
//! to share across threads; training mutates parameters and requires
//! exclusive access.

use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

/// Standard deviation of the Gaussian used for the ranking weights at
/// initialization.
pub const RANKING_INIT_SIGMA: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    ReLU,
    Tanh,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::ReLU => z.max(0.0),
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative expressed in terms of the post-activation value.
    fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            Activation::ReLU => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - a * a,
        }
    }

    pub fn parse(token: &str) -> Result<Self> {
        match token {
            "relu" => Ok(Activation::ReLU),
            "tanh" => Ok(Activation::Tanh),
            other => Err(Error::Config(format!(
                "unknown activation `{other}` (expected `relu` or `tanh`)"
            ))),
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Activation::ReLU => write!(f, "relu"),
            Activation::Tanh => write!(f, "tanh"),
        }
    }
}

/// Shape of the embedding network. With `hidden_dims` empty the embedding
/// is a single linear map from input to embedding space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetArchitecture {
    pub input_dim: usize,
    pub hidden_dims: Vec<usize>,
    pub embedding_dim: usize,
    pub activation: Activation,
}

impl NetArchitecture {
    /// Default shape for a given input dimension: hidden [64, 64],
    /// embedding 32, ReLU.
    pub fn new(input_dim: usize) -> Self {
        NetArchitecture {
            input_dim,
            hidden_dims: vec![64, 64],
            embedding_dim: 32,
            activation: Activation::ReLU,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.embedding_dim == 0 || self.hidden_dims.contains(&0) {
            return Err(Error::Config("all layer dimensions must be >= 1".into()));
        }
        Ok(())
    }

    /// (in, out) of every layer, hidden layers first, embedding layer last.
    fn layer_shapes(&self) -> Vec<(usize, usize)> {
        let mut dims = vec![self.input_dim];
        dims.extend(&self.hidden_dims);
        dims.push(self.embedding_dim);
        dims.windows(2).map(|w| (w[0], w[1])).collect()
    }
}

/// One dense layer, weights row-major `[out_dim x in_dim]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Layer {
    fn forward(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for r in 0..self.out_dim {
            let row = &self.weights[r * self.in_dim..(r + 1) * self.in_dim];
            let z: f64 = self.bias[r] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
            out.push(z);
        }
    }
}

/// Siamese ranking network: shared hidden layers plus bias-free ranking
/// weights of length `embedding_dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeepRankModel {
    pub arch: NetArchitecture,
    pub layers: Vec<Layer>,
    pub ranking_weights: Vec<f64>,
}

/// One tensor per parameter, in model order. Used both for gradients and
/// for optimizer accumulators.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSet {
    pub layer_weights: Vec<Vec<f64>>,
    pub layer_biases: Vec<Vec<f64>>,
    pub ranking: Vec<f64>,
}

pub type ParameterGradients = ParamSet;

impl ParamSet {
    pub fn zeros_like(model: &DeepRankModel) -> Self {
        ParamSet {
            layer_weights: model.layers.iter().map(|l| vec![0.0; l.weights.len()]).collect(),
            layer_biases: model.layers.iter().map(|l| vec![0.0; l.bias.len()]).collect(),
            ranking: vec![0.0; model.ranking_weights.len()],
        }
    }

    /// Tensors in the fixed order layer0.weight, layer0.bias, layer1.weight,
    /// ..., ranking.weight. The same order is used by the model accessors.
    pub fn tensors(&self) -> Vec<&Vec<f64>> {
        let mut out = Vec::new();
        for (w, b) in self.layer_weights.iter().zip(&self.layer_biases) {
            out.push(w);
            out.push(b);
        }
        out.push(&self.ranking);
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Vec<f64>> {
        let mut out = Vec::new();
        for (w, b) in self.layer_weights.iter_mut().zip(self.layer_biases.iter_mut()) {
            out.push(w);
            out.push(b);
        }
        out.push(&mut self.ranking);
        out
    }
}

/// Activations of both branches from one [`DeepRankModel::pair_forward`]
/// call. Single-use; not shareable across threads.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// Per branch: index 0 is the input, then each layer's post-activation
    /// output; the last entry is the embedding.
    acts_first: Vec<Vec<f64>>,
    acts_second: Vec<Vec<f64>>,
}

impl DeepRankModel {
    /// Seeded initialization: hidden weights Xavier-uniform
    /// `U(-sqrt(6/(fan_in+fan_out)), +sqrt(6/(fan_in+fan_out)))`, hidden
    /// biases zero, ranking weights zero-mean Gaussian with sigma 0.01.
    /// Fully determined by `seed`.
    pub fn init(arch: &NetArchitecture, seed: u64) -> Result<Self> {
        arch.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layers = Vec::new();
        for (fan_in, fan_out) in arch.layer_shapes() {
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let weights = (0..fan_in * fan_out)
                .map(|_| rng.gen_range(-limit..limit))
                .collect();
            layers.push(Layer {
                in_dim: fan_in,
                out_dim: fan_out,
                weights,
                bias: vec![0.0; fan_out],
            });
        }
        let normal = Normal::new(0.0, RANKING_INIT_SIGMA).expect("valid sigma");
        let ranking_weights = (0..arch.embedding_dim).map(|_| normal.sample(&mut rng)).collect();
        Ok(DeepRankModel {
            arch: arch.clone(),
            layers,
            ranking_weights,
        })
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.arch.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.arch.input_dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Forward pass of one branch; returns all activations, input first,
    /// embedding last.
    fn branch_forward(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let last = self.layers.len() - 1;
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.to_vec());
        let mut buf = Vec::new();
        for (l, layer) in self.layers.iter().enumerate() {
            layer.forward(acts.last().unwrap(), &mut buf);
            if l < last {
                for z in buf.iter_mut() {
                    *z = self.arch.activation.apply(*z);
                }
            }
            acts.push(buf.clone());
        }
        acts
    }

    /// Backpropagates `d_embed` (gradient at the embedding) through one
    /// branch, accumulating parameter gradients, and returns the gradient
    /// with respect to the input.
    fn branch_backward(&self, acts: &[Vec<f64>], d_embed: &[f64], grads: &mut ParamSet) -> Vec<f64> {
        let last = self.layers.len() - 1;
        let mut grad = d_embed.to_vec();
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            // gradient w.r.t. the pre-activation of layer l
            let dz: Vec<f64> = if l == last {
                grad
            } else {
                grad.iter()
                    .zip(&acts[l + 1])
                    .map(|(g, a)| g * self.arch.activation.derivative_from_output(*a))
                    .collect()
            };
            let input = &acts[l];
            let gw = &mut grads.layer_weights[l];
            for (r, dzr) in dz.iter().enumerate() {
                let row = &mut gw[r * layer.in_dim..(r + 1) * layer.in_dim];
                for (gwc, xc) in row.iter_mut().zip(input) {
                    *gwc += dzr * xc;
                }
                grads.layer_biases[l][r] += dzr;
            }
            let mut dx = vec![0.0; layer.in_dim];
            for (r, dzr) in dz.iter().enumerate() {
                let row = &layer.weights[r * layer.in_dim..(r + 1) * layer.in_dim];
                for (dxc, wc) in dx.iter_mut().zip(row) {
                    *dxc += wc * dzr;
                }
            }
            grad = dx;
        }
        grad
    }

    /// The deep attribute representation h(x).
    pub fn embed(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        Ok(self.branch_forward(x).pop().unwrap())
    }

    /// Per-item ranking score `w . h(x)`.
    pub fn score(&self, x: &[f64]) -> Result<f64> {
        let h = self.embed(x)?;
        Ok(self.ranking_weights.iter().zip(&h).map(|(w, v)| w * v).sum())
    }

    /// Pair output: both branch embeddings first, then one subtraction and
    /// one dot product, so swapping the inputs negates the result exactly.
    pub fn pair_forward(&self, x_first: &[f64], x_second: &[f64]) -> Result<(f64, ForwardCache)> {
        self.check_input(x_first)?;
        self.check_input(x_second)?;
        let acts_first = self.branch_forward(x_first);
        let acts_second = self.branch_forward(x_second);
        let hi = acts_first.last().unwrap();
        let hj = acts_second.last().unwrap();
        let diff_score = self
            .ranking_weights
            .iter()
            .zip(hi.iter().zip(hj))
            .map(|(w, (a, b))| w * (a - b))
            .sum();
        Ok((
            diff_score,
            ForwardCache {
                acts_first,
                acts_second,
            },
        ))
    }

    fn check_cache(&self, cache: &ForwardCache) -> Result<()> {
        let expected = self.layers.len() + 1;
        for acts in [&cache.acts_first, &cache.acts_second] {
            if acts.len() != expected
                || acts[0].len() != self.arch.input_dim
                || acts.last().unwrap().len() != self.arch.embedding_dim
            {
                return Err(Error::StaleCache);
            }
            for (l, layer) in self.layers.iter().enumerate() {
                if acts[l + 1].len() != layer.out_dim {
                    return Err(Error::StaleCache);
                }
            }
        }
        Ok(())
    }

    /// `d(diff_score)/d(params)` scaled by `upstream_grad`. Gradients from
    /// the two branches accumulate into the single shared parameter set.
    pub fn pair_backward(
        &self,
        cache: &ForwardCache,
        upstream_grad: f64,
    ) -> Result<ParameterGradients> {
        self.check_cache(cache)?;
        let mut grads = ParamSet::zeros_like(self);
        let hi = cache.acts_first.last().unwrap();
        let hj = cache.acts_second.last().unwrap();
        for (g, (a, b)) in grads.ranking.iter_mut().zip(hi.iter().zip(hj)) {
            *g = (a - b) * upstream_grad;
        }
        let d_embed_first: Vec<f64> =
            self.ranking_weights.iter().map(|w| w * upstream_grad).collect();
        let d_embed_second: Vec<f64> =
            self.ranking_weights.iter().map(|w| -w * upstream_grad).collect();
        self.branch_backward(&cache.acts_first, &d_embed_first, &mut grads);
        self.branch_backward(&cache.acts_second, &d_embed_second, &mut grads);
        Ok(grads)
    }

    /// Gradient of the ranking score with respect to the input vector.
    pub fn input_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let acts = self.branch_forward(x);
        let mut scratch = ParamSet::zeros_like(self);
        Ok(self.branch_backward(&acts, &self.ranking_weights.clone(), &mut scratch))
    }

    pub fn param_tensors(&self) -> Vec<&Vec<f64>> {
        let mut out = Vec::new();
        for l in &self.layers {
            out.push(&l.weights);
            out.push(&l.bias);
        }
        out.push(&self.ranking_weights);
        out
    }

    pub fn param_tensors_mut(&mut self) -> Vec<&mut Vec<f64>> {
        let mut out = Vec::new();
        for l in &mut self.layers {
            out.push(&mut l.weights);
            out.push(&mut l.bias);
        }
        out.push(&mut self.ranking_weights);
        out
    }
}

/// Compares supplied analytic gradients of the pair output against central
/// finite differences over every parameter; returns the norm-wise relative
/// error `max_i |a_i - fd_i| / max(max_i |a_i|, max_i |fd_i|, 1e-12)`.
///
/// The error is normalized by the largest gradient magnitude rather than
/// component by component: near-zero components are below the difference
/// quotient's own resolution (rounding noise of a few ulps of the pair
/// output divided by 2*step, plus O(step^2) truncation), so their
/// component-wise ratios measure the quotient, not the backward pass. The
/// embedding-layer biases are the extreme case — they cancel exactly in the
/// pair difference, making their true gradient 0.0.
pub fn grad_check_against(
    model: &DeepRankModel,
    x_first: &[f64],
    x_second: &[f64],
    step: f64,
    grads: &ParameterGradients,
) -> Result<f64> {
    let mut probe = model.clone();
    let n_tensors = probe.param_tensors().len();
    let mut max_diff = 0.0f64;
    let mut max_mag = 0.0f64;
    for t in 0..n_tensors {
        let len = probe.param_tensors()[t].len();
        for k in 0..len {
            let orig = probe.param_tensors()[t][k];
            probe.param_tensors_mut()[t][k] = orig + step;
            let (plus, _) = probe.pair_forward(x_first, x_second)?;
            probe.param_tensors_mut()[t][k] = orig - step;
            let (minus, _) = probe.pair_forward(x_first, x_second)?;
            probe.param_tensors_mut()[t][k] = orig;
            let fd = (plus - minus) / (2.0 * step);
            let analytic = grads.tensors()[t][k];
            max_diff = max_diff.max((analytic - fd).abs());
            max_mag = max_mag.max(analytic.abs().max(fd.abs()));
        }
    }
    Ok(max_diff / max_mag.max(1e-12))
}

/// Finite-difference validation of [`DeepRankModel::pair_backward`]; see
/// [`grad_check_against`]. Default step 1e-5.
pub fn grad_check(model: &DeepRankModel, x_first: &[f64], x_second: &[f64], step: f64) -> Result<f64> {
    let (_, cache) = model.pair_forward(x_first, x_second)?;
    let grads = model.pair_backward(&cache, 1.0)?;
    grad_check_against(model, x_first, x_second, step, &grads)
}

const MODEL_MAGIC: &str = "relrank-model";
const MODEL_VERSION: u32 = 1;

fn fmt_f64(v: f64) -> String {
    // 17 significant digits; round-trips f64 exactly
    format!("{v:.16e}")
}

impl DeepRankModel {
    /// Writes the self-describing text format: header fields, then each
    /// parameter tensor as a named, row-major flat array of decimal
    /// numbers with 17 significant digits.
    pub fn save(&self, w: &mut dyn Write) -> Result<()> {
        writeln!(w, "{MODEL_MAGIC} {MODEL_VERSION}")?;
        writeln!(w, "input_dim {}", self.arch.input_dim)?;
        let hidden = if self.arch.hidden_dims.is_empty() {
            "-".to_string()
        } else {
            self.arch
                .hidden_dims
                .iter()
                .map(|d| d.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        writeln!(w, "hidden_dims {hidden}")?;
        writeln!(w, "embedding_dim {}", self.arch.embedding_dim)?;
        writeln!(w, "activation {}", self.arch.activation)?;
        for (l, layer) in self.layers.iter().enumerate() {
            writeln!(w, "tensor layer.{l}.weight {} {}", layer.out_dim, layer.in_dim)?;
            writeln!(
                w,
                "{}",
                layer.weights.iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>().join(" ")
            )?;
            writeln!(w, "tensor layer.{l}.bias {}", layer.out_dim)?;
            writeln!(
                w,
                "{}",
                layer.bias.iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>().join(" ")
            )?;
        }
        writeln!(w, "tensor ranking.weight {}", self.arch.embedding_dim)?;
        writeln!(
            w,
            "{}",
            self.ranking_weights
                .iter()
                .map(|v| fmt_f64(*v))
                .collect::<Vec<_>>()
                .join(" ")
        )?;
        Ok(())
    }

    pub fn save_to_path(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.save(&mut f)
    }

    pub fn load(r: &mut dyn BufRead) -> Result<Self> {
        let mut lines = Vec::new();
        for line in r.lines() {
            lines.push(line?);
        }
        let mut cursor = 0usize;
        let mut next = |what: &str| -> Result<(usize, String)> {
            while cursor < lines.len() && lines[cursor].trim().is_empty() {
                cursor += 1;
            }
            if cursor >= lines.len() {
                return Err(Error::ModelFormat {
                    line: lines.len(),
                    msg: format!("unexpected end of file, expected {what}"),
                });
            }
            cursor += 1;
            Ok((cursor, lines[cursor - 1].clone()))
        };
        let bad = |line: usize, msg: String| Error::ModelFormat { line, msg };

        let (ln, header) = next("header")?;
        let mut it = header.split_whitespace();
        if it.next() != Some(MODEL_MAGIC) {
            return Err(bad(ln, format!("expected `{MODEL_MAGIC}` header")));
        }
        let version: u32 = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| bad(ln, "missing format version".into()))?;
        if version != MODEL_VERSION {
            return Err(bad(ln, format!("unsupported format version {version}")));
        }

        let mut field = |name: &str| -> Result<String> {
            let (ln, line) = next(name)?;
            let mut it = line.split_whitespace();
            if it.next() != Some(name) {
                return Err(bad(ln, format!("expected `{name}` field")));
            }
            it.next()
                .map(str::to_string)
                .ok_or_else(|| bad(ln, format!("missing value for `{name}`")))
        };
        let input_dim: usize = field("input_dim")?
            .parse()
            .map_err(|_| Error::ModelFormat { line: 2, msg: "bad input_dim".into() })?;
        let hidden_raw = field("hidden_dims")?;
        let hidden_dims: Vec<usize> = if hidden_raw == "-" {
            Vec::new()
        } else {
            hidden_raw
                .split(',')
                .map(|t| {
                    t.parse().map_err(|_| Error::ModelFormat {
                        line: 3,
                        msg: format!("bad hidden dimension `{t}`"),
                    })
                })
                .collect::<Result<_>>()?
        };
        let embedding_dim: usize = field("embedding_dim")?
            .parse()
            .map_err(|_| Error::ModelFormat { line: 4, msg: "bad embedding_dim".into() })?;
        let activation = Activation::parse(&field("activation")?)?;
        let arch = NetArchitecture {
            input_dim,
            hidden_dims,
            embedding_dim,
            activation,
        };
        arch.validate()?;

        let mut read_tensor = |name: &str, len: usize| -> Result<Vec<f64>> {
            let (ln, line) = next("tensor declaration")?;
            let mut it = line.split_whitespace();
            if it.next() != Some("tensor") || it.next() != Some(name) {
                return Err(bad(ln, format!("expected `tensor {name} ...`")));
            }
            let (ln, line) = next("tensor values")?;
            let values: Vec<f64> = line
                .split_whitespace()
                .map(|t| {
                    t.parse::<f64>().map_err(|_| Error::ModelFormat {
                        line: ln,
                        msg: format!("bad number `{t}`"),
                    })
                })
                .collect::<Result<_>>()?;
            if values.len() != len {
                return Err(bad(
                    ln,
                    format!("tensor {name}: expected {len} values, got {}", values.len()),
                ));
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err(bad(ln, format!("tensor {name}: non-finite value")));
            }
            Ok(values)
        };

        let mut layers = Vec::new();
        for (l, (fan_in, fan_out)) in arch.layer_shapes().into_iter().enumerate() {
            let weights = read_tensor(&format!("layer.{l}.weight"), fan_in * fan_out)?;
            let bias = read_tensor(&format!("layer.{l}.bias"), fan_out)?;
            layers.push(Layer {
                in_dim: fan_in,
                out_dim: fan_out,
                weights,
                bias,
            });
        }
        let ranking_weights = read_tensor("ranking.weight", arch.embedding_dim)?;
        Ok(DeepRankModel {
            arch,
            layers,
            ranking_weights,
        })
    }

    pub fn load_from_path(path: &Path) -> Result<Self> {
        let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
        Self::load(&mut f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn tiny_arch(activation: Activation) -> NetArchitecture {
        NetArchitecture {
            input_dim: 3,
            hidden_dims: vec![4],
            embedding_dim: 2,
            activation,
        }
    }

    fn random_input(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
        (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    #[test]
    fn init_is_deterministic() {
        let arch = tiny_arch(Activation::ReLU);
        let a = DeepRankModel::init(&arch, 42).unwrap();
        let b = DeepRankModel::init(&arch, 42).unwrap();
        assert_eq!(a, b);
        let c = DeepRankModel::init(&arch, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn init_ranking_weight_statistics() {
        let arch = NetArchitecture {
            input_dim: 2,
            hidden_dims: vec![],
            embedding_dim: 10_000,
            activation: Activation::ReLU,
        };
        let m = DeepRankModel::init(&arch, 7).unwrap();
        let n = m.ranking_weights.len() as f64;
        let mean = m.ranking_weights.iter().sum::<f64>() / n;
        let std = (m.ranking_weights.iter().map(|w| (w - mean) * (w - mean)).sum::<f64>() / n)
            .sqrt();
        assert!(mean.abs() < 3.0 * RANKING_INIT_SIGMA / n.sqrt());
        assert!((std - RANKING_INIT_SIGMA).abs() < 0.02 * RANKING_INIT_SIGMA);
    }

    #[test]
    fn init_hidden_weights_within_xavier_bounds() {
        let arch = tiny_arch(Activation::ReLU);
        let m = DeepRankModel::init(&arch, 1).unwrap();
        for layer in &m.layers {
            let limit = (6.0 / (layer.in_dim + layer.out_dim) as f64).sqrt();
            assert!(layer.weights.iter().all(|w| w.abs() < limit));
            assert!(layer.bias.iter().all(|b| *b == 0.0));
        }
    }

    fn identity_model(d: usize) -> DeepRankModel {
        let arch = NetArchitecture {
            input_dim: d,
            hidden_dims: vec![],
            embedding_dim: d,
            activation: Activation::ReLU,
        };
        let mut m = DeepRankModel::init(&arch, 0).unwrap();
        for v in m.layers[0].weights.iter_mut() {
            *v = 0.0;
        }
        for k in 0..d {
            m.layers[0].weights[k * d + k] = 1.0;
        }
        m
    }

    #[test]
    fn identity_embedding() {
        let m = identity_model(2);
        assert_eq!(m.embed(&[1.0, 2.0]).unwrap(), vec![1.0, 2.0]);
    }

    #[test]
    fn zero_input_zero_bias_gives_zero_embedding() {
        let arch = tiny_arch(Activation::ReLU);
        let m = DeepRankModel::init(&arch, 3).unwrap();
        let h = m.embed(&[0.0, 0.0, 0.0]).unwrap();
        assert!(h.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn hand_computed_forward_pass() {
        // W1 = [[1, -1]], b1 = [0], ReLU, W2 = [[2]]
        let arch = NetArchitecture {
            input_dim: 2,
            hidden_dims: vec![1],
            embedding_dim: 1,
            activation: Activation::ReLU,
        };
        let mut m = DeepRankModel::init(&arch, 0).unwrap();
        m.layers[0].weights = vec![1.0, -1.0];
        m.layers[0].bias = vec![0.0];
        m.layers[1].weights = vec![2.0];
        m.layers[1].bias = vec![0.0];
        let h = m.embed(&[3.0, 1.0]).unwrap();
        assert_eq!(h, vec![4.0]);
        m.ranking_weights = vec![0.5];
        assert_eq!(m.score(&[3.0, 1.0]).unwrap(), 2.0);
    }

    #[test]
    fn zero_ranking_weights_score_zero() {
        let arch = tiny_arch(Activation::Tanh);
        let mut m = DeepRankModel::init(&arch, 9).unwrap();
        m.ranking_weights = vec![0.0; 2];
        assert_eq!(m.score(&[0.3, -0.5, 1.0]).unwrap(), 0.0);
    }

    #[test]
    fn pair_forward_identical_inputs_is_exactly_zero() {
        let arch = tiny_arch(Activation::ReLU);
        let m = DeepRankModel::init(&arch, 4).unwrap();
        let x = [0.1, 0.7, -0.2];
        let (s, _) = m.pair_forward(&x, &x).unwrap();
        assert_eq!(s, 0.0);
    }

    #[test]
    fn pair_forward_swap_negates_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let arch = tiny_arch(Activation::Tanh);
        let m = DeepRankModel::init(&arch, 5).unwrap();
        for _ in 0..50 {
            let a = random_input(&mut rng, 3);
            let b = random_input(&mut rng, 3);
            let (s_ab, _) = m.pair_forward(&a, &b).unwrap();
            let (s_ba, _) = m.pair_forward(&b, &a).unwrap();
            assert_eq!(s_ab, -s_ba);
        }
    }

    #[test]
    fn pair_forward_consistent_with_score_difference() {
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        let arch = tiny_arch(Activation::Tanh);
        let m = DeepRankModel::init(&arch, 6).unwrap();
        for _ in 0..20 {
            let a = random_input(&mut rng, 3);
            let b = random_input(&mut rng, 3);
            let (s, _) = m.pair_forward(&a, &b).unwrap();
            let diff = m.score(&a).unwrap() - m.score(&b).unwrap();
            assert!((s - diff).abs() < 1e-12);
        }
    }

    #[test]
    fn backward_identical_inputs_cancels() {
        let arch = tiny_arch(Activation::ReLU);
        let m = DeepRankModel::init(&arch, 8).unwrap();
        let x = [0.4, -0.3, 0.9];
        let (_, cache) = m.pair_forward(&x, &x).unwrap();
        let g = m.pair_backward(&cache, 1.0).unwrap();
        for t in g.tensors() {
            assert!(t.iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn backward_zero_upstream_is_zero() {
        let arch = tiny_arch(Activation::Tanh);
        let m = DeepRankModel::init(&arch, 8).unwrap();
        let (_, cache) = m.pair_forward(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]).unwrap();
        let g = m.pair_backward(&cache, 0.0).unwrap();
        for t in g.tensors() {
            assert!(t.iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn grad_check_tanh_tight() {
        let mut rng = ChaCha8Rng::seed_from_u64(100);
        for seed in 0..20 {
            let arch = NetArchitecture {
                input_dim: 5,
                hidden_dims: vec![6, 4],
                embedding_dim: 3,
                activation: Activation::Tanh,
            };
            let m = DeepRankModel::init(&arch, seed).unwrap();
            let a = random_input(&mut rng, 5);
            let b = random_input(&mut rng, 5);
            let err = grad_check(&m, &a, &b, 1e-4).unwrap();
            assert!(err < 1e-6, "seed {seed}: error {err}");
        }
    }

    /// Resamples inputs until no pre-activation of either branch lands
    /// within `margin` of a ReLU boundary.
    fn relu_safe_inputs(
        m: &DeepRankModel,
        rng: &mut ChaCha8Rng,
        margin: f64,
    ) -> (Vec<f64>, Vec<f64>) {
        loop {
            let a = random_input(rng, m.arch.input_dim);
            let b = random_input(rng, m.arch.input_dim);
            // recompute pre-activations: inactive units output exactly 0,
            // so post-activations cannot tell "off" from "at the boundary"
            let near_kink = |x: &[f64]| {
                let mut acts = x.to_vec();
                let last = m.layers.len() - 1;
                for (l, layer) in m.layers.iter().enumerate() {
                    let mut z = vec![0.0; layer.out_dim];
                    for r in 0..layer.out_dim {
                        let row = &layer.weights[r * layer.in_dim..(r + 1) * layer.in_dim];
                        z[r] = layer.bias[r]
                            + row.iter().zip(&acts).map(|(w, v)| w * v).sum::<f64>();
                    }
                    if l < last {
                        if z.iter().any(|v| v.abs() < margin) {
                            return true;
                        }
                        for v in z.iter_mut() {
                            *v = m.arch.activation.apply(*v);
                        }
                    }
                    acts = z;
                }
                false
            };
            if !near_kink(&a) && !near_kink(&b) {
                return (a, b);
            }
        }
    }

    #[test]
    fn grad_check_relu() {
        let mut rng = ChaCha8Rng::seed_from_u64(200);
        for seed in 0..20 {
            let arch = NetArchitecture {
                input_dim: 5,
                hidden_dims: vec![6, 4],
                embedding_dim: 3,
                activation: Activation::ReLU,
            };
            let m = DeepRankModel::init(&arch, seed).unwrap();
            let (a, b) = relu_safe_inputs(&m, &mut rng, 1e-3);
            let err = grad_check(&m, &a, &b, 1e-4).unwrap();
            assert!(err < 1e-4, "seed {seed}: error {err}");
        }
    }

    #[test]
    fn grad_check_detects_corrupted_gradient() {
        let arch = tiny_arch(Activation::Tanh);
        let m = DeepRankModel::init(&arch, 55).unwrap();
        let a = [0.5, -0.4, 0.8];
        let b = [-0.1, 0.9, 0.2];
        let (_, cache) = m.pair_forward(&a, &b).unwrap();
        let mut grads = m.pair_backward(&cache, 1.0).unwrap();
        // corrupt one entry of the first hidden weight gradient
        grads.layer_weights[0][0] += 1.0;
        let err = grad_check_against(&m, &a, &b, 1e-5, &grads).unwrap();
        assert!(err > 1e-2, "corruption not detected, error {err}");
    }

    #[test]
    fn input_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(300);
        let arch = tiny_arch(Activation::Tanh);
        let m = DeepRankModel::init(&arch, 12).unwrap();
        let x = random_input(&mut rng, 3);
        let g = m.input_gradient(&x).unwrap();
        for k in 0..x.len() {
            let h = 1e-6;
            let mut xp = x.clone();
            xp[k] += h;
            let mut xm = x.clone();
            xm[k] -= h;
            let fd = (m.score(&xp).unwrap() - m.score(&xm).unwrap()) / (2.0 * h);
            let rel = (g[k] - fd).abs() / g[k].abs().max(fd.abs()).max(1e-12);
            assert!(rel < 1e-6);
        }
    }

    #[test]
    fn persistence_round_trip_is_bit_exact() {
        let arch = NetArchitecture {
            input_dim: 4,
            hidden_dims: vec![5],
            embedding_dim: 3,
            activation: Activation::Tanh,
        };
        let m = DeepRankModel::init(&arch, 77).unwrap();
        let mut buf = Vec::new();
        m.save(&mut buf).unwrap();
        let loaded = DeepRankModel::load(&mut std::io::Cursor::new(&buf)).unwrap();
        assert_eq!(m, loaded);
        let mut buf2 = Vec::new();
        loaded.save(&mut buf2).unwrap();
        assert_eq!(buf, buf2);
    }

    #[test]
    fn persistence_no_hidden_layers() {
        let arch = NetArchitecture {
            input_dim: 3,
            hidden_dims: vec![],
            embedding_dim: 3,
            activation: Activation::ReLU,
        };
        let m = DeepRankModel::init(&arch, 2).unwrap();
        let mut buf = Vec::new();
        m.save(&mut buf).unwrap();
        let loaded = DeepRankModel::load(&mut std::io::Cursor::new(&buf)).unwrap();
        assert_eq!(m, loaded);
    }

    #[test]
    fn load_rejects_wrong_shape() {
        let arch = tiny_arch(Activation::ReLU);
        let m = DeepRankModel::init(&arch, 1).unwrap();
        let mut buf = Vec::new();
        m.save(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap().replace("embedding_dim 2", "embedding_dim 3");
        let err = DeepRankModel::load(&mut std::io::Cursor::new(text.as_bytes()));
        assert!(matches!(err, Err(Error::ModelFormat { .. })));
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let arch = tiny_arch(Activation::ReLU);
        let m = DeepRankModel::init(&arch, 1).unwrap();
        assert!(m.embed(&[1.0]).is_err());
        assert!(m.pair_forward(&[1.0, 2.0, 3.0], &[1.0]).is_err());
    }
}
