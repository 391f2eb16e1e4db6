//! Command-line wiring: dataset synthesis, training, evaluation, ranking,
//! attribution, and gradient checking.
//!
//! Logs go to standard error, data to standard output. Exit codes:
//! 0 success, 1 validation/usage error, 2 numerical failure (non-finite
//! loss, failed gradient check, non-convergence).

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::{self, SynthMode, SynthSpec};
use crate::error::{Error, Result};
use crate::eval;
use crate::net::{self, Activation, DeepRankModel, NetArchitecture};
use crate::trainer::{self, TrainConfig};
use crate::types::{Dataset, FeatureVector, LossConfig, Split};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "relrank",
    about = "Pairwise learning-to-rank for relative attributes",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset with known latent strengths
    Synth(SynthArgs),
    /// Train one ranking network per attribute on train-split pairs
    Train(TrainArgs),
    /// Report pairwise accuracy on test-split ordered pairs
    Eval(EvalArgs),
    /// Rank all items by model score
    Rank(RankArgs),
    /// Finite-difference check of the pair-output gradients
    Gradcheck(GradcheckArgs),
    /// Per-feature attribution of one item's ranking score
    Attr(AttrArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// key = value config file; flags override file values
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// linear, nonlinear or category
    #[arg(long)]
    pub mode: Option<String>,
    /// Feature dimension
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub items: Option<usize>,
    /// Train-split ordered pair count
    #[arg(long)]
    pub ordered: Option<usize>,
    /// Train-split similar pair count
    #[arg(long)]
    pub similar: Option<usize>,
    #[arg(long)]
    pub test_ordered: Option<usize>,
    #[arg(long)]
    pub test_similar: Option<usize>,
    /// Similarity threshold on strength differences
    #[arg(long)]
    pub theta: Option<f64>,
    /// Label noise sigma on latent strength per pair draw
    #[arg(long)]
    pub noise: Option<f64>,
    /// Category count (category mode only)
    #[arg(long)]
    pub categories: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory for features.csv, pairs.tsv, truth.csv
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub pairs: PathBuf,
    /// Attribute to train (omit with --all-attrs)
    #[arg(long)]
    pub attr: Option<String>,
    /// Train every attribute sequentially; --model-out is then a directory
    #[arg(long)]
    pub all_attrs: bool,
    #[arg(long)]
    pub model_out: PathBuf,
    /// key = value config file; flags override file values
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub c1: Option<f64>,
    #[arg(long)]
    pub c2: Option<f64>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// RMSProp decay rho
    #[arg(long)]
    pub optimizer_decay: Option<f64>,
    #[arg(long)]
    pub optimizer_epsilon: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub no_shuffle: bool,
    #[arg(long)]
    pub weight_decay_hidden: Option<f64>,
    /// Additive Gaussian feature jitter sigma during training
    #[arg(long)]
    pub feature_jitter_sigma: Option<f64>,
    /// Comma-separated hidden layer sizes, or `-` for none
    #[arg(long)]
    pub hidden_dims: Option<String>,
    #[arg(long)]
    pub embedding_dim: Option<usize>,
    /// relu or tanh
    #[arg(long)]
    pub activation: Option<String>,
    /// Standardize features to zero mean / unit variance first
    #[arg(long)]
    pub standardize: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub pairs: PathBuf,
    #[arg(long)]
    pub attr: String,
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub standardize: bool,
}

#[derive(Debug, Args)]
pub struct RankArgs {
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    /// Min-max map scores to [-1, 1]
    #[arg(long)]
    pub normalize: bool,
    #[arg(long)]
    pub standardize: bool,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// relu or tanh
    #[arg(long, default_value = "relu")]
    pub activation: String,
}

#[derive(Debug, Args)]
pub struct AttrArgs {
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    /// Item id to attribute
    #[arg(long)]
    pub item: String,
    #[arg(long)]
    pub standardize: bool,
}

const CONFIG_KEYS: &[&str] = &[
    "c1",
    "c2",
    "learning_rate",
    "batch_size",
    "epochs",
    "optimizer_decay",
    "optimizer_epsilon",
    "seed",
    "shuffle_each_epoch",
    "weight_decay_hidden",
    "feature_jitter_sigma",
    "hidden_dims",
    "embedding_dim",
    "activation",
    "mode",
    "dimension",
    "n_items",
    "n_ordered_pairs",
    "n_similar_pairs",
    "n_test_ordered_pairs",
    "n_test_similar_pairs",
    "similarity_threshold",
    "noise_sigma",
    "n_categories",
    "standardize",
];

/// Flat `key = value` configuration file, `#` comments allowed. Unknown
/// keys are an error so typos cannot silently fall back to defaults.
#[derive(Debug, Clone, Default)]
pub struct FileConfig {
    values: BTreeMap<String, String>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (idx, line) in text.lines().enumerate() {
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (key, value) = trimmed.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected `key = value`", idx + 1))
            })?;
            let key = key.trim().to_string();
            if !CONFIG_KEYS.contains(&key.as_str()) {
                return Err(Error::Config(format!("unknown key `{key}`")));
            }
            values.insert(key, value.trim().to_string());
        }
        Ok(FileConfig { values })
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.values.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse::<T>().map(Some).map_err(|_| {
                Error::Config(format!("bad value `{raw}` for key `{key}`"))
            }),
        }
    }

    fn get_str(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }
}

fn load_optional_config(path: &Option<PathBuf>) -> Result<FileConfig> {
    match path {
        Some(p) => FileConfig::load(p),
        None => Ok(FileConfig::default()),
    }
}

fn parse_hidden_dims(raw: &str) -> Result<Vec<usize>> {
    if raw == "-" {
        return Ok(Vec::new());
    }
    raw.split(',')
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad hidden dimension `{t}`")))
        })
        .collect()
}

fn resolve<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

pub fn cmd_synth(args: &SynthArgs, stderr: &mut dyn Write) -> Result<()> {
    let file = load_optional_config(&args.config)?;
    let mode_token = args
        .mode
        .as_deref()
        .or_else(|| file.get_str("mode"))
        .unwrap_or("linear")
        .to_string();
    let n_categories = resolve(args.categories, file.parsed("n_categories")?, 8);
    let mode = match mode_token.as_str() {
        "linear" => SynthMode::Linear,
        "nonlinear" => SynthMode::Nonlinear,
        "category" => SynthMode::Category { n_categories },
        other => return Err(Error::Config(format!("unknown mode `{other}`"))),
    };
    let spec = SynthSpec {
        mode,
        dimension: resolve(args.d, file.parsed("dimension")?, 10),
        n_items: resolve(args.items, file.parsed("n_items")?, 200),
        n_ordered_pairs: resolve(args.ordered, file.parsed("n_ordered_pairs")?, 500),
        n_similar_pairs: resolve(args.similar, file.parsed("n_similar_pairs")?, 100),
        n_test_ordered_pairs: resolve(args.test_ordered, file.parsed("n_test_ordered_pairs")?, 0),
        n_test_similar_pairs: resolve(args.test_similar, file.parsed("n_test_similar_pairs")?, 0),
        similarity_threshold: resolve(args.theta, file.parsed("similarity_threshold")?, 0.1),
        noise_sigma: resolve(args.noise, file.parsed("noise_sigma")?, 0.0),
        seed: resolve(args.seed, file.parsed("seed")?, 0),
    };
    let (dataset, truth) = data::generate(&spec)?;
    std::fs::create_dir_all(&args.out_dir)?;
    data::save_features(&args.out_dir.join("features.csv"), &dataset.items)?;
    data::save_pairs(&args.out_dir.join("pairs.tsv"), &dataset.attributes, &dataset.pairs)?;
    data::save_truth(&args.out_dir.join("truth.csv"), &truth)?;
    writeln!(
        stderr,
        "wrote {} items, {} pairs to {}",
        dataset.items.len(),
        dataset.pairs.values().map(Vec::len).sum::<usize>(),
        args.out_dir.display()
    )?;
    Ok(())
}

fn load_dataset_for(args_features: &Path, args_pairs: &Path, standardize: bool, stderr: &mut dyn Write) -> Result<Dataset> {
    let (ds, warnings) = data::load_dataset(args_features, args_pairs)?;
    for w in &warnings {
        writeln!(stderr, "warning: {w}")?;
    }
    Ok(if standardize { ds.standardized() } else { ds })
}

pub fn cmd_train(args: &TrainArgs, stderr: &mut dyn Write) -> Result<()> {
    let file = load_optional_config(&args.config)?;
    let standardize =
        args.standardize || file.parsed::<bool>("standardize")?.unwrap_or(false);
    let dataset = load_dataset_for(&args.features, &args.pairs, standardize, stderr)?;
    let loss = LossConfig::new(
        resolve(args.c1, file.parsed("c1")?, 0.1),
        resolve(args.c2, file.parsed("c2")?, 0.1),
    )?;
    let shuffle_file = file.parsed::<bool>("shuffle_each_epoch")?.unwrap_or(true);
    let cfg = TrainConfig {
        loss,
        learning_rate: resolve(args.learning_rate, file.parsed("learning_rate")?, 1e-5),
        batch_size: resolve(args.batch_size, file.parsed("batch_size")?, 48),
        epochs: resolve(args.epochs, file.parsed("epochs")?, 200),
        optimizer_decay: resolve(args.optimizer_decay, file.parsed("optimizer_decay")?, 0.9),
        optimizer_epsilon: resolve(args.optimizer_epsilon, file.parsed("optimizer_epsilon")?, 1e-7),
        seed: resolve(args.seed, file.parsed("seed")?, 0),
        shuffle_each_epoch: !args.no_shuffle && shuffle_file,
        weight_decay_hidden: resolve(args.weight_decay_hidden, file.parsed("weight_decay_hidden")?, 0.0),
        feature_jitter_sigma: resolve(
            args.feature_jitter_sigma,
            file.parsed("feature_jitter_sigma")?,
            0.0,
        ),
    };
    let hidden_raw = args
        .hidden_dims
        .clone()
        .or_else(|| file.get_str("hidden_dims").map(String::from))
        .unwrap_or_else(|| "64,64".to_string());
    let arch = NetArchitecture {
        input_dim: dataset.dimension,
        hidden_dims: parse_hidden_dims(&hidden_raw)?,
        embedding_dim: resolve(args.embedding_dim, file.parsed("embedding_dim")?, 32),
        activation: Activation::parse(
            args.activation
                .as_deref()
                .or_else(|| file.get_str("activation"))
                .unwrap_or("relu"),
        )?,
    };

    let targets: Vec<(String, u64)> = if args.all_attrs {
        dataset
            .attributes
            .iter()
            .map(|a| (a.name.clone(), cfg.seed.wrapping_add(a.index as u64)))
            .collect()
    } else {
        let name = args
            .attr
            .clone()
            .ok_or_else(|| Error::Config("either --attr or --all-attrs is required".into()))?;
        vec![(name, cfg.seed)]
    };
    if args.all_attrs {
        std::fs::create_dir_all(&args.model_out)?;
    }
    for (name, seed) in targets {
        let attribute = dataset.attribute_by_name(&name)?.clone();
        let run_cfg = TrainConfig { seed, ..cfg.clone() };
        writeln!(stderr, "training attribute `{name}` (seed {seed})")?;
        let (model, _history) = trainer::train(&dataset, &attribute, &arch, &run_cfg, Some(stderr))?;
        let out_path = if args.all_attrs {
            args.model_out.join(format!("{name}.model"))
        } else {
            args.model_out.clone()
        };
        model.save_to_path(&out_path)?;
        writeln!(stderr, "wrote {}", out_path.display())?;
    }
    Ok(())
}

pub fn cmd_eval(args: &EvalArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let dataset = load_dataset_for(&args.features, &args.pairs, args.standardize, stderr)?;
    let model = DeepRankModel::load_from_path(&args.model)?;
    let attribute = dataset.attribute_by_name(&args.attr)?;
    let pairs: Vec<_> = dataset
        .pairs_for(attribute.index, Some(Split::Test))
        .into_iter()
        .cloned()
        .collect();
    let scorer = |x: &FeatureVector| model.score(&x.values);
    let report = eval::pairwise_accuracy(scorer, &pairs, &dataset, &attribute.name)?;
    writeln!(stdout, "{report}")?;
    Ok(())
}

pub fn cmd_rank(args: &RankArgs, stdout: &mut dyn Write) -> Result<()> {
    let items = data::load_features(&args.features)?;
    let dimension = items.values().next().map(FeatureVector::dim).unwrap_or(0);
    let mut dataset = Dataset {
        dimension,
        items,
        attributes: Vec::new(),
        pairs: BTreeMap::new(),
        standardized: false,
    };
    dataset.validate()?;
    if args.standardize {
        dataset = dataset.standardized();
    }
    let model = DeepRankModel::load_from_path(&args.model)?;
    let ids: Vec<String> = dataset.items.keys().cloned().collect();
    let scorer = |x: &FeatureVector| model.score(&x.values);
    let ranked = eval::rank_items(scorer, &ids, &dataset, args.normalize)?;
    for (id, score) in ranked {
        writeln!(stdout, "{id}\t{score}")?;
    }
    Ok(())
}

pub fn cmd_gradcheck(args: &GradcheckArgs, stdout: &mut dyn Write) -> Result<()> {
    let activation = Activation::parse(&args.activation)?;
    let arch = NetArchitecture {
        input_dim: 10,
        hidden_dims: vec![8, 6],
        embedding_dim: 4,
        activation,
    };
    let model = DeepRankModel::init(&arch, args.seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed.wrapping_add(0x5EED));
    let threshold = match activation {
        Activation::ReLU => 1e-4,
        Activation::Tanh => 1e-6,
    };
    let (a, b) = loop {
        let a: Vec<f64> = (0..10).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..10).map(|_| rng.gen_range(-1.0..1.0)).collect();
        if activation == Activation::Tanh {
            break (a, b);
        }
        // for ReLU, avoid inputs near an activation boundary
        let safe = |x: &[f64]| {
            let mut acts = x.to_vec();
            let mut ok = true;
            for (l, layer) in model.layers.iter().enumerate() {
                let mut next = vec![0.0; layer.out_dim];
                for r in 0..layer.out_dim {
                    let row = &layer.weights[r * layer.in_dim..(r + 1) * layer.in_dim];
                    next[r] = layer.bias[r]
                        + row.iter().zip(&acts).map(|(w, v)| w * v).sum::<f64>();
                }
                if l < model.layers.len() - 1 {
                    if next.iter().any(|z| z.abs() < 1e-3) {
                        ok = false;
                    }
                    for z in next.iter_mut() {
                        *z = z.max(0.0);
                    }
                }
                acts = next;
            }
            ok
        };
        if safe(&a) && safe(&b) {
            break (a, b);
        }
    };
    let err = net::grad_check(&model, &a, &b, 1e-4)?;
    writeln!(stdout, "max relative error {err:.3e} (threshold {threshold:.1e})")?;
    if err > threshold {
        return Err(Error::GradCheckFailed { error: err, threshold });
    }
    Ok(())
}

pub fn cmd_attr(args: &AttrArgs, stdout: &mut dyn Write) -> Result<()> {
    let items = data::load_features(&args.features)?;
    let dimension = items.values().next().map(FeatureVector::dim).unwrap_or(0);
    let mut dataset = Dataset {
        dimension,
        items,
        attributes: Vec::new(),
        pairs: BTreeMap::new(),
        standardized: false,
    };
    dataset.validate()?;
    if args.standardize {
        dataset = dataset.standardized();
    }
    let model = DeepRankModel::load_from_path(&args.model)?;
    let item = dataset.features(&args.item)?;
    for value in eval::input_attribution(&model, item)? {
        writeln!(stdout, "{value}")?;
    }
    Ok(())
}

/// Maps an error to the documented exit code.
pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::NonFiniteLoss { .. }
        | Error::GradCheckFailed { .. }
        | Error::DidNotConverge { .. } => EXIT_NUMERICAL,
        _ => EXIT_USAGE,
    }
}

/// Runs a parsed command against the given output streams.
pub fn run(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Synth(args) => cmd_synth(args, stderr),
        Command::Train(args) => cmd_train(args, stderr),
        Command::Eval(args) => cmd_eval(args, stdout, stderr),
        Command::Rank(args) => cmd_rank(args, stdout),
        Command::Gradcheck(args) => cmd_gradcheck(args, stdout),
        Command::Attr(args) => cmd_attr(args, stdout),
    }
}

/// Entry point used by the binary: parses arguments from the process
/// environment and returns the process exit code.
pub fn run_cli() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // help/version requests are success, anything else is usage
            let code = if err.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = err.print();
            return code;
        }
    };
    let mut stdout = std::io::stdout();
    let mut stderr = std::io::stderr();
    match run(&cli, &mut stdout, &mut stderr) {
        Ok(()) => EXIT_OK,
        Err(err) => {
            let _ = writeln!(stderr, "error: {err}");
            exit_code_for(&err)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_rejects_unknown_keys() {
        let err = FileConfig::parse("learning_rate = 1e-4\nlerning_rate = 1e-3\n");
        assert!(matches!(err, Err(Error::Config(msg)) if msg.contains("lerning_rate")));
    }

    #[test]
    fn config_parses_values_and_comments() {
        let cfg = FileConfig::parse("# comment\nepochs = 42\nactivation = tanh\n").unwrap();
        assert_eq!(cfg.parsed::<usize>("epochs").unwrap(), Some(42));
        assert_eq!(cfg.get_str("activation"), Some("tanh"));
        assert_eq!(cfg.parsed::<f64>("c1").unwrap(), None);
    }

    #[test]
    fn config_rejects_bad_values() {
        let cfg = FileConfig::parse("epochs = many\n").unwrap();
        assert!(cfg.parsed::<usize>("epochs").is_err());
    }

    #[test]
    fn hidden_dims_tokens() {
        assert_eq!(parse_hidden_dims("-").unwrap(), Vec::<usize>::new());
        assert_eq!(parse_hidden_dims("64,64").unwrap(), vec![64, 64]);
        assert!(parse_hidden_dims("64,x").is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code_for(&Error::EmptyPairs), EXIT_USAGE);
        assert_eq!(
            exit_code_for(&Error::NonFiniteLoss { epoch: 0, batch: 0 }),
            EXIT_NUMERICAL
        );
        assert_eq!(
            exit_code_for(&Error::GradCheckFailed {
                error: 1.0,
                threshold: 1e-4
            }),
            EXIT_NUMERICAL
        );
    }
}
