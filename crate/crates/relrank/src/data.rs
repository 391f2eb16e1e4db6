//! Synthetic relative-attribute datasets with known latent strengths,
//! plus ingestion and serialization of feature files, pair-annotation
//! files, and truth files.
//!
//! File formats (normative, bit-exact):
//!
//! * Feature file: one line per item, comma-separated, first field the
//!   item id, remaining fields decimal numbers. UTF-8; `#` comment lines
//!   allowed.
//! * Pair file: tab-separated `attribute<TAB>id_i<TAB>id_j<TAB>relation`
//!   with relation in {more, less, equal} and an optional fifth column
//!   `train|test` (absent means train).
//! * Truth file: one line per item, `id,latent_strength`.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::error::{Error, Result};
use crate::types::{
    canonicalize_pair, AttributeSpec, Dataset, DatasetPair, FeatureVector, RawLabel, Relation,
    Split,
};

/// Shape of the latent strength function behind a synthetic dataset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SynthMode {
    /// `s(x) = v . x` for a seeded unit vector v.
    Linear,
    /// `s(x) = sin(3 * v1.x) + (v2.x)^2` for seeded orthonormal v1, v2;
    /// not recoverable by any linear scorer. The constants are fixed.
    Nonlinear,
    /// Items belong to categories whose ranks (a seeded permutation) give
    /// the strengths; equal-rank categories yield Similar pairs.
    Category { n_categories: usize },
}

/// Generation request: item and pair counts, similarity threshold, label
/// noise, seed. Test-split pair counts default to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub mode: SynthMode,
    pub dimension: usize,
    pub n_items: usize,
    pub n_ordered_pairs: usize,
    pub n_similar_pairs: usize,
    pub n_test_ordered_pairs: usize,
    pub n_test_similar_pairs: usize,
    /// Pairs whose (noisy) strength difference is within this threshold
    /// are labeled Similar.
    pub similarity_threshold: f64,
    /// Gaussian noise on latent strength per pair draw, before labeling.
    pub noise_sigma: f64,
    pub seed: u64,
}

impl SynthSpec {
    pub fn new(mode: SynthMode, dimension: usize, n_items: usize) -> Self {
        SynthSpec {
            mode,
            dimension,
            n_items,
            n_ordered_pairs: 0,
            n_similar_pairs: 0,
            n_test_ordered_pairs: 0,
            n_test_similar_pairs: 0,
            similarity_threshold: 0.0,
            noise_sigma: 0.0,
            seed: 0,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.dimension == 0 {
            return Err(Error::Config("dimension must be >= 1".into()));
        }
        if self.n_items < 2 {
            return Err(Error::Config("need at least 2 items".into()));
        }
        if !(self.similarity_threshold >= 0.0) {
            return Err(Error::Config("similarity_threshold must be >= 0".into()));
        }
        if !(self.noise_sigma >= 0.0) {
            return Err(Error::Config("noise_sigma must be >= 0".into()));
        }
        if let SynthMode::Category { n_categories } = self.mode {
            if n_categories < 2 {
                return Err(Error::Config("need at least 2 categories".into()));
            }
        }
        Ok(())
    }
}

/// Per-item true strengths of a synthetic dataset. Only exists for
/// synthetic data and is never consumed by training.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentTruth {
    pub strengths: BTreeMap<String, f64>,
    pub description: String,
}

fn unit_vector(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            return v.iter().map(|x| x / norm).collect();
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

const MAX_DRAWS: usize = 1_000_000;

/// Generates items, per-item latent strengths, and pair constraints
/// labeled from (noisy) strength differences against the similarity
/// threshold. Deterministic per seed.
pub fn generate(spec: &SynthSpec) -> Result<(Dataset, LatentTruth)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let d = spec.dimension;

    let width = (spec.n_items as f64).log10().ceil().max(1.0) as usize + 1;
    let ids: Vec<String> = (0..spec.n_items).map(|i| format!("i{i:0width$}")).collect();
    let mut items = BTreeMap::new();
    let mut features = Vec::with_capacity(spec.n_items);
    for id in &ids {
        let x: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
        features.push(x.clone());
        items.insert(id.clone(), FeatureVector::new(id, x)?);
    }

    let (strengths, description): (Vec<f64>, String) = match &spec.mode {
        SynthMode::Linear => {
            let v = unit_vector(&mut rng, d);
            (
                features.iter().map(|x| dot(&v, x)).collect(),
                "linear: s(x) = v.x for a seeded unit vector v".to_string(),
            )
        }
        SynthMode::Nonlinear => {
            let v1 = unit_vector(&mut rng, d);
            // Gram-Schmidt for an orthonormal second direction
            let v2 = loop {
                let raw = unit_vector(&mut rng, d);
                let proj = dot(&raw, &v1);
                let ortho: Vec<f64> = raw.iter().zip(&v1).map(|(r, v)| r - proj * v).collect();
                let norm = ortho.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > 1e-6 {
                    break ortho.iter().map(|x| x / norm).collect::<Vec<f64>>();
                }
            };
            (
                features
                    .iter()
                    .map(|x| (3.0 * dot(&v1, x)).sin() + dot(&v2, x).powi(2))
                    .collect(),
                "nonlinear: s(x) = sin(3 * v1.x) + (v2.x)^2 for seeded orthonormal v1, v2"
                    .to_string(),
            )
        }
        SynthMode::Category { n_categories } => {
            // ranks are a seeded permutation of 0..n_categories
            let mut ranks: Vec<usize> = (0..*n_categories).collect();
            use rand::seq::SliceRandom;
            ranks.shuffle(&mut rng);
            let category_of: Vec<usize> =
                (0..spec.n_items).map(|_| rng.gen_range(0..*n_categories)).collect();
            (
                category_of.iter().map(|c| ranks[*c] as f64).collect(),
                format!("category: {n_categories} categories, strength = seeded category rank"),
            )
        }
    };

    let noise = if spec.noise_sigma > 0.0 {
        Some(Normal::new(0.0, spec.noise_sigma).expect("valid sigma"))
    } else {
        None
    };
    let sample_pairs = |need_ordered: usize,
                            need_similar: usize,
                            split: Split,
                            rng: &mut ChaCha8Rng|
     -> Result<Vec<DatasetPair>> {
        let mut out = Vec::with_capacity(need_ordered + need_similar);
        let mut ordered = 0usize;
        let mut similar = 0usize;
        let mut draws = 0usize;
        while ordered < need_ordered || similar < need_similar {
            draws += 1;
            if draws > MAX_DRAWS {
                return Err(Error::UnsatisfiablePairs { attempts: draws - 1 });
            }
            let a = rng.gen_range(0..spec.n_items);
            let b = rng.gen_range(0..spec.n_items);
            if a == b {
                continue;
            }
            let mut sa = strengths[a];
            let mut sb = strengths[b];
            if let Some(dist) = &noise {
                sa += dist.sample(rng);
                sb += dist.sample(rng);
            }
            let constraint = if (sa - sb).abs() > spec.similarity_threshold {
                if ordered >= need_ordered {
                    continue;
                }
                ordered += 1;
                let (hi, lo) = if sa > sb { (a, b) } else { (b, a) };
                canonicalize_pair(ids[hi].clone(), ids[lo].clone(), RawLabel::FirstStronger)
            } else {
                if similar >= need_similar {
                    continue;
                }
                similar += 1;
                canonicalize_pair(ids[a].clone(), ids[b].clone(), RawLabel::Equal)
            };
            out.push(DatasetPair { constraint, split });
        }
        Ok(out)
    };

    let mut pairs = sample_pairs(spec.n_ordered_pairs, spec.n_similar_pairs, Split::Train, &mut rng)?;
    pairs.extend(sample_pairs(
        spec.n_test_ordered_pairs,
        spec.n_test_similar_pairs,
        Split::Test,
        &mut rng,
    )?);

    let attributes = vec![AttributeSpec {
        name: "strength".to_string(),
        index: 0,
    }];
    let dataset = Dataset::new(d, items, attributes, [(0usize, pairs)].into())?;
    let truth = LatentTruth {
        strengths: ids.into_iter().zip(strengths).collect(),
        description,
    };
    Ok((dataset, truth))
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line,
        msg: msg.into(),
    }
}

/// Parses a feature file; validates uniform dimension and finiteness.
/// An empty file yields an empty map.
pub fn load_features(path: &Path) -> Result<BTreeMap<String, FeatureVector>> {
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut out = BTreeMap::new();
    let mut dim: Option<usize> = None;
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut fields = trimmed.split(',');
        let id = fields.next().unwrap().trim().to_string();
        if id.is_empty() {
            return Err(parse_err(path, lineno, "empty item id"));
        }
        let values: Vec<f64> = fields
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| parse_err(path, lineno, format!("bad number `{}`", t.trim())))
            })
            .collect::<Result<_>>()?;
        if values.is_empty() {
            return Err(parse_err(path, lineno, "no feature values"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(parse_err(path, lineno, "non-finite feature value"));
        }
        match dim {
            None => dim = Some(values.len()),
            Some(d) if d != values.len() => {
                return Err(parse_err(
                    path,
                    lineno,
                    format!("dimension {} does not match earlier dimension {d}", values.len()),
                ))
            }
            _ => {}
        }
        if out.contains_key(&id) {
            return Err(parse_err(path, lineno, format!("duplicate item id `{id}`")));
        }
        out.insert(id.clone(), FeatureVector { id, values });
    }
    Ok(out)
}

/// Writes the feature file format. Values use Rust's shortest exact
/// decimal representation, so reloading reproduces every float exactly.
pub fn save_features(path: &Path, items: &BTreeMap<String, FeatureVector>) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    for fv in items.values() {
        write!(w, "{}", fv.id)?;
        for v in &fv.values {
            write!(w, ",{v}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Parses a pair file: canonicalizes each line, groups by attribute
/// (preserving file order), and returns attributes in first-appearance
/// order alongside the grouped pairs.
pub fn load_pairs(path: &Path) -> Result<(Vec<AttributeSpec>, BTreeMap<usize, Vec<DatasetPair>>)> {
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut attributes: Vec<AttributeSpec> = Vec::new();
    let mut pairs: BTreeMap<usize, Vec<DatasetPair>> = BTreeMap::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let trimmed = line.trim_end_matches(['\r', '\n']);
        if trimmed.trim().is_empty() || trimmed.trim_start().starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split('\t').collect();
        if fields.len() < 4 || fields.len() > 5 {
            return Err(parse_err(
                path,
                lineno,
                format!("expected 4 or 5 tab-separated fields, got {}", fields.len()),
            ));
        }
        let (attr_name, id_i, id_j, relation) = (fields[0], fields[1], fields[2], fields[3]);
        let label = match relation {
            "more" => RawLabel::FirstStronger,
            "less" => RawLabel::SecondStronger,
            "equal" => RawLabel::Equal,
            other => {
                return Err(parse_err(
                    path,
                    lineno,
                    format!("unknown relation token `{other}` (expected more, less or equal)"),
                ))
            }
        };
        let split = match fields.get(4) {
            None => Split::Train,
            Some(&"train") => Split::Train,
            Some(&"test") => Split::Test,
            Some(other) => {
                return Err(parse_err(
                    path,
                    lineno,
                    format!("unknown split tag `{other}` (expected train or test)"),
                ))
            }
        };
        let index = match attributes.iter().find(|a| a.name == attr_name) {
            Some(a) => a.index,
            None => {
                let index = attributes.len();
                attributes.push(AttributeSpec {
                    name: attr_name.to_string(),
                    index,
                });
                index
            }
        };
        pairs.entry(index).or_default().push(DatasetPair {
            constraint: canonicalize_pair(id_i, id_j, label),
            split,
        });
    }
    Ok((attributes, pairs))
}

/// Writes the pair file format with the split column.
pub fn save_pairs(
    path: &Path,
    attributes: &[AttributeSpec],
    pairs: &BTreeMap<usize, Vec<DatasetPair>>,
) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    for attr in attributes {
        if let Some(list) = pairs.get(&attr.index) {
            for dp in list {
                let relation = match dp.constraint.relation {
                    Relation::Ordered => "more",
                    Relation::Similar => "equal",
                };
                let split = match dp.split {
                    Split::Train => "train",
                    Split::Test => "test",
                };
                writeln!(
                    w,
                    "{}\t{}\t{}\t{}\t{}",
                    attr.name, dp.constraint.first, dp.constraint.second, relation, split
                )?;
            }
        }
    }
    Ok(())
}

/// Writes the truth file: `id,latent_strength`, one line per item.
pub fn save_truth(path: &Path, truth: &LatentTruth) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "# {}", truth.description)?;
    for (id, s) in &truth.strengths {
        writeln!(w, "{id},{s}")?;
    }
    Ok(())
}

/// Parses a truth file written by [`save_truth`].
pub fn load_truth(path: &Path) -> Result<BTreeMap<String, f64>> {
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut out = BTreeMap::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (id, value) = trimmed
            .split_once(',')
            .ok_or_else(|| parse_err(path, lineno, "expected `id,strength`"))?;
        let s: f64 = value
            .trim()
            .parse()
            .map_err(|_| parse_err(path, lineno, format!("bad number `{value}`")))?;
        out.insert(id.trim().to_string(), s);
    }
    Ok(out)
}

/// Loads a feature file and pair file into a validated dataset, printing
/// nothing; validation warnings are returned for the caller to surface.
pub fn load_dataset(features_path: &Path, pairs_path: &Path) -> Result<(Dataset, Vec<String>)> {
    let items = load_features(features_path)?;
    let dimension = items.values().next().map(|fv| fv.dim()).unwrap_or(0);
    let (attributes, pairs) = load_pairs(pairs_path)?;
    let ds = Dataset {
        dimension,
        items,
        attributes,
        pairs,
        standardized: false,
    };
    let warnings = ds.validate()?;
    Ok((ds, warnings))
}

#[allow(clippy::type_complexity)]
/// Resolves the pair lists of a generated dataset as (ordered, similar)
/// counts per split; test support.
pub fn pair_counts(dataset: &Dataset, attr_index: usize) -> ((usize, usize), (usize, usize)) {
    let count = |split: Split| {
        let ps = dataset.pairs_for(attr_index, Some(split));
        (
            ps.iter().filter(|p| p.relation == Relation::Ordered).count(),
            ps.iter().filter(|p| p.relation == Relation::Similar).count(),
        )
    };
    (count(Split::Train), count(Split::Test))
}
