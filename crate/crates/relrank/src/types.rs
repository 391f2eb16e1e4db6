//! Shared domain types: feature vectors, pair constraints, attributes and
//! datasets. No I/O and no learning logic lives here.
//!
//! All types are immutable after construction and safe to share across
//! threads.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// An item represented as a fixed-length real vector, the stand-in for raw
/// inputs fed to the embedding function.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub id: String,
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn new(id: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        let id = id.into();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: format!("feature vector `{id}`"),
            });
        }
        Ok(FeatureVector { id, values })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

/// How the two members of an annotated pair relate for a given attribute.
///
/// `Ordered` always means the attribute is strictly stronger in `first`
/// than in `second`; `Similar` means comparable strength.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Ordered,
    Similar,
}

/// Raw annotation labels as they arrive from ingestion, before
/// canonicalization to the stronger-first convention.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RawLabel {
    FirstStronger,
    SecondStronger,
    Equal,
}

/// One annotated pair under the stronger-first convention.
///
/// `first == second` is allowed; such a pair is only ever
/// Similar-consistent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairConstraint {
    pub first: String,
    pub second: String,
    pub relation: Relation,
}

/// Normalizes a raw annotation to the stronger-first convention:
/// `SecondStronger` swaps the members, `Equal` maps to `Similar`.
///
/// Idempotent on its output: re-canonicalizing an `Ordered` pair with
/// `FirstStronger` returns it unchanged.
pub fn canonicalize_pair(
    first: impl Into<String>,
    second: impl Into<String>,
    label: RawLabel,
) -> PairConstraint {
    let (first, second) = (first.into(), second.into());
    match label {
        RawLabel::FirstStronger => PairConstraint {
            first,
            second,
            relation: Relation::Ordered,
        },
        RawLabel::SecondStronger => PairConstraint {
            first: second,
            second: first,
            relation: Relation::Ordered,
        },
        RawLabel::Equal => PairConstraint {
            first,
            second,
            relation: Relation::Similar,
        },
    }
}

/// A named attribute with its index into the dataset's pair lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttributeSpec {
    pub name: String,
    pub index: usize,
}

/// Which side of the train/test split a pair belongs to. Pairs without an
/// explicit tag default to `Train`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

/// A pair constraint with its split tag.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetPair {
    pub constraint: PairConstraint,
    pub split: Split,
}

impl DatasetPair {
    pub fn train(constraint: PairConstraint) -> Self {
        DatasetPair {
            constraint,
            split: Split::Train,
        }
    }

    pub fn test(constraint: PairConstraint) -> Self {
        DatasetPair {
            constraint,
            split: Split::Test,
        }
    }
}

/// Items, attributes and per-attribute pair constraints.
///
/// `standardized` records whether per-dimension standardization has been
/// applied; it is off by default and feature values are used as-is.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub dimension: usize,
    pub items: BTreeMap<String, FeatureVector>,
    pub attributes: Vec<AttributeSpec>,
    pub pairs: BTreeMap<usize, Vec<DatasetPair>>,
    pub standardized: bool,
}

impl Dataset {
    /// Builds a dataset and validates it, discarding any warnings.
    pub fn new(
        dimension: usize,
        items: BTreeMap<String, FeatureVector>,
        attributes: Vec<AttributeSpec>,
        pairs: BTreeMap<usize, Vec<DatasetPair>>,
    ) -> Result<Self> {
        let ds = Dataset {
            dimension,
            items,
            attributes,
            pairs,
            standardized: false,
        };
        ds.validate()?;
        Ok(ds)
    }

    /// Checks structural invariants. Returns human-readable warnings for
    /// suspicious but non-fatal annotations (unsatisfiable Ordered
    /// self-pairs).
    pub fn validate(&self) -> Result<Vec<String>> {
        let mut warnings = Vec::new();
        for fv in self.items.values() {
            if fv.dim() != self.dimension {
                return Err(Error::DimensionMismatch {
                    expected: self.dimension,
                    got: fv.dim(),
                });
            }
            if fv.values.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    context: format!("feature vector `{}`", fv.id),
                });
            }
        }
        let mut names = std::collections::BTreeSet::new();
        for attr in &self.attributes {
            if !names.insert(attr.name.as_str()) {
                return Err(Error::Config(format!(
                    "duplicate attribute name `{}`",
                    attr.name
                )));
            }
        }
        for (attr_index, pairs) in &self.pairs {
            for dp in pairs {
                let c = &dp.constraint;
                for id in [&c.first, &c.second] {
                    if !self.items.contains_key(id) {
                        return Err(Error::UnknownItem(id.clone()));
                    }
                }
                if c.first == c.second && c.relation == Relation::Ordered {
                    warnings.push(format!(
                        "attribute {attr_index}: ordered self-pair `{}` is unsatisfiable \
                         (score difference is identically 0)",
                        c.first
                    ));
                }
            }
        }
        Ok(warnings)
    }

    pub fn features(&self, id: &str) -> Result<&FeatureVector> {
        self.items
            .get(id)
            .ok_or_else(|| Error::UnknownItem(id.to_string()))
    }

    pub fn attribute_by_name(&self, name: &str) -> Result<&AttributeSpec> {
        self.attributes
            .iter()
            .find(|a| a.name == name)
            .ok_or_else(|| Error::UnknownAttribute(name.to_string()))
    }

    /// Pairs of one attribute, optionally filtered by split tag.
    pub fn pairs_for(&self, attr_index: usize, split: Option<Split>) -> Vec<&PairConstraint> {
        self.pairs
            .get(&attr_index)
            .map(|ps| {
                ps.iter()
                    .filter(|dp| split.map_or(true, |s| dp.split == s))
                    .map(|dp| &dp.constraint)
                    .collect()
            })
            .unwrap_or_default()
    }

    /// Returns a copy with every feature dimension shifted to zero mean and
    /// scaled to unit variance. Statistics are computed over the items
    /// referenced by train-split pairs; when no pairs exist, over all items.
    /// Constant dimensions are left centered but unscaled.
    pub fn standardized(&self) -> Dataset {
        let mut ref_ids: std::collections::BTreeSet<&str> = std::collections::BTreeSet::new();
        for pairs in self.pairs.values() {
            for dp in pairs {
                if dp.split == Split::Train {
                    ref_ids.insert(dp.constraint.first.as_str());
                    ref_ids.insert(dp.constraint.second.as_str());
                }
            }
        }
        let reference: Vec<&FeatureVector> = if ref_ids.is_empty() {
            self.items.values().collect()
        } else {
            ref_ids.iter().filter_map(|id| self.items.get(*id)).collect()
        };
        let n = reference.len().max(1) as f64;
        let mut mean = vec![0.0; self.dimension];
        for fv in &reference {
            for (m, v) in mean.iter_mut().zip(&fv.values) {
                *m += v / n;
            }
        }
        let mut var = vec![0.0; self.dimension];
        for fv in &reference {
            for ((s, v), m) in var.iter_mut().zip(&fv.values).zip(&mean) {
                *s += (v - m) * (v - m) / n;
            }
        }
        let scale: Vec<f64> = var
            .iter()
            .map(|v| if *v > 0.0 { 1.0 / v.sqrt() } else { 1.0 })
            .collect();
        let items = self
            .items
            .iter()
            .map(|(id, fv)| {
                let values = fv
                    .values
                    .iter()
                    .zip(&mean)
                    .zip(&scale)
                    .map(|((v, m), s)| (v - m) * s)
                    .collect();
                (
                    id.clone(),
                    FeatureVector {
                        id: fv.id.clone(),
                        values,
                    },
                )
            })
            .collect();
        Dataset {
            dimension: self.dimension,
            items,
            attributes: self.attributes.clone(),
            pairs: self.pairs.clone(),
            standardized: true,
        }
    }
}

/// Trade-off constants of the ranking loss: `c1` penalizes margin
/// violations of ordered pairs, `c2` penalizes nonzero score differences
/// of similar pairs. Both default to 0.1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossConfig {
    pub c1: f64,
    pub c2: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig { c1: 0.1, c2: 0.1 }
    }
}

impl LossConfig {
    pub fn new(c1: f64, c2: f64) -> Result<Self> {
        if !(c1 >= 0.0 && c2 >= 0.0) {
            return Err(Error::Config(format!(
                "penalty constants must be non-negative, got c1={c1}, c2={c2}"
            )));
        }
        Ok(LossConfig { c1, c2 })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fv(id: &str, values: &[f64]) -> FeatureVector {
        FeatureVector::new(id, values.to_vec()).unwrap()
    }

    #[test]
    fn canonicalize_first_stronger_is_identity() {
        let p = canonicalize_pair("A", "B", RawLabel::FirstStronger);
        assert_eq!(
            p,
            PairConstraint {
                first: "A".into(),
                second: "B".into(),
                relation: Relation::Ordered
            }
        );
    }

    #[test]
    fn canonicalize_second_stronger_swaps() {
        let p = canonicalize_pair("A", "B", RawLabel::SecondStronger);
        assert_eq!(p.first, "B");
        assert_eq!(p.second, "A");
        assert_eq!(p.relation, Relation::Ordered);
    }

    #[test]
    fn canonicalize_equal_maps_to_similar() {
        let p = canonicalize_pair("A", "B", RawLabel::Equal);
        assert_eq!(p.relation, Relation::Similar);
        assert_eq!((p.first.as_str(), p.second.as_str()), ("A", "B"));
    }

    #[test]
    fn canonicalize_is_idempotent_on_output() {
        let p = canonicalize_pair("A", "B", RawLabel::SecondStronger);
        let again = canonicalize_pair(p.first.clone(), p.second.clone(), RawLabel::FirstStronger);
        assert_eq!(p, again);
    }

    #[test]
    fn nan_feature_rejected() {
        assert!(FeatureVector::new("a", vec![1.0, f64::NAN]).is_err());
    }

    fn small_dataset() -> Dataset {
        let mut items = BTreeMap::new();
        items.insert("a".to_string(), fv("a", &[1.0, 2.0]));
        items.insert("b".to_string(), fv("b", &[0.0, -1.0]));
        let attrs = vec![AttributeSpec {
            name: "strength".into(),
            index: 0,
        }];
        let mut pairs = BTreeMap::new();
        pairs.insert(
            0,
            vec![DatasetPair::train(canonicalize_pair(
                "a",
                "b",
                RawLabel::FirstStronger,
            ))],
        );
        Dataset::new(2, items, attrs, pairs).unwrap()
    }

    #[test]
    fn validation_rejects_unknown_ids() {
        let mut ds = small_dataset();
        ds.pairs.get_mut(&0).unwrap().push(DatasetPair::train(
            canonicalize_pair("a", "missing", RawLabel::Equal),
        ));
        assert!(matches!(ds.validate(), Err(Error::UnknownItem(_))));
    }

    #[test]
    fn validation_rejects_dimension_mismatch() {
        let mut ds = small_dataset();
        ds.items.insert("c".to_string(), fv("c", &[1.0, 2.0, 3.0]));
        assert!(matches!(
            ds.validate(),
            Err(Error::DimensionMismatch { expected: 2, got: 3 })
        ));
    }

    #[test]
    fn ordered_self_pair_warns_but_passes() {
        let mut ds = small_dataset();
        ds.pairs.get_mut(&0).unwrap().push(DatasetPair::train(
            canonicalize_pair("a", "a", RawLabel::FirstStronger),
        ));
        let warnings = ds.validate().unwrap();
        assert_eq!(warnings.len(), 1);
        assert!(warnings[0].contains("self-pair"));
    }

    #[test]
    fn standardization_centers_and_scales() {
        let ds = small_dataset().standardized();
        assert!(ds.standardized);
        let n = ds.items.len() as f64;
        for k in 0..2 {
            let mean: f64 = ds.items.values().map(|fv| fv.values[k]).sum::<f64>() / n;
            let var: f64 = ds.items.values().map(|fv| fv.values[k].powi(2)).sum::<f64>() / n;
            assert!(mean.abs() < 1e-12);
            assert!((var - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn negative_penalty_rejected() {
        assert!(LossConfig::new(-0.1, 0.1).is_err());
    }
}
