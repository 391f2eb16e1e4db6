//! Pairwise-accuracy evaluation, global ranking induction, rank
//! correlation against known ground truth, and input-gradient attribution.
//!
//! All operations are pure functions over immutable inputs.

use std::fmt;

use crate::error::{Error, Result};
use crate::net::DeepRankModel;
use crate::types::{Dataset, FeatureVector, PairConstraint, Relation};

/// Pairwise-accuracy summary for one attribute. Similar pairs are never
/// counted in the denominator.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub attribute: String,
    pub n_ordered_pairs: usize,
    pub n_correct: usize,
    pub accuracy: f64,
    pub n_similar_excluded: usize,
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "attr {} acc {:.4} correct {}/{} excluded {}",
            self.attribute,
            self.accuracy,
            self.n_correct,
            self.n_ordered_pairs,
            self.n_similar_excluded
        )
    }
}

/// 1 if the first item shows the attribute more strongly under the scorer,
/// 0 otherwise. An exact tie predicts 0.
pub fn predict_pair<F>(scorer: F, x_first: &FeatureVector, x_second: &FeatureVector) -> Result<u8>
where
    F: Fn(&FeatureVector) -> Result<f64>,
{
    let diff = scorer(x_first)? - scorer(x_second)?;
    Ok(if diff > 0.0 { 1 } else { 0 })
}

/// Fraction of Ordered pairs whose predicted order matches the
/// annotation; Similar pairs are excluded and counted separately. A list
/// with zero Ordered pairs is an error, not accuracy 0.
pub fn pairwise_accuracy<F>(
    scorer: F,
    pairs: &[PairConstraint],
    dataset: &Dataset,
    attribute: &str,
) -> Result<EvalReport>
where
    F: Fn(&FeatureVector) -> Result<f64>,
{
    let mut n_ordered = 0usize;
    let mut n_correct = 0usize;
    let mut n_similar = 0usize;
    for p in pairs {
        match p.relation {
            Relation::Similar => n_similar += 1,
            Relation::Ordered => {
                n_ordered += 1;
                let xi = dataset.features(&p.first)?;
                let xj = dataset.features(&p.second)?;
                if predict_pair(&scorer, xi, xj)? == 1 {
                    n_correct += 1;
                }
            }
        }
    }
    if n_ordered == 0 {
        return Err(Error::NoOrderedPairs {
            excluded: n_similar,
        });
    }
    Ok(EvalReport {
        attribute: attribute.to_string(),
        n_ordered_pairs: n_ordered,
        n_correct,
        accuracy: n_correct as f64 / n_ordered as f64,
        n_similar_excluded: n_similar,
    })
}

/// Scores every item and sorts descending, id as tiebreaker. With
/// `normalize`, scores are min-max mapped to [-1, 1] (max to 1.0, min to
/// -1.0); if all scores are equal, every normalized value is 0.0.
pub fn rank_items<F>(
    scorer: F,
    item_ids: &[String],
    dataset: &Dataset,
    normalize: bool,
) -> Result<Vec<(String, f64)>>
where
    F: Fn(&FeatureVector) -> Result<f64>,
{
    if item_ids.is_empty() {
        return Err(Error::EmptyItems);
    }
    let mut scored: Vec<(String, f64)> = item_ids
        .iter()
        .map(|id| Ok((id.clone(), scorer(dataset.features(id)?)?)))
        .collect::<Result<_>>()?;
    if normalize {
        let min = scored.iter().map(|(_, s)| *s).fold(f64::INFINITY, f64::min);
        let max = scored.iter().map(|(_, s)| *s).fold(f64::NEG_INFINITY, f64::max);
        let range = max - min;
        for (_, s) in scored.iter_mut() {
            *s = if range > 0.0 {
                2.0 * (*s - min) / range - 1.0
            } else {
                0.0
            };
        }
    }
    scored.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.0.cmp(&b.0))
    });
    Ok(scored)
}

/// Tie-corrected Kendall tau-b by pairwise enumeration (O(n^2)).
///
/// An all-tied `truth` makes the correlation undefined and is an error.
pub fn kendall_tau(scores: &[f64], truth: &[f64]) -> Result<f64> {
    if scores.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: scores.len(),
            right: truth.len(),
        });
    }
    let n = scores.len();
    if n < 2 {
        return Err(Error::LengthMismatch { left: n, right: 2 });
    }
    let mut concordant = 0u64;
    let mut discordant = 0u64;
    let mut ties_scores = 0u64;
    let mut ties_truth = 0u64;
    for i in 0..n {
        for j in (i + 1)..n {
            let ds = scores[i] - scores[j];
            let dt = truth[i] - truth[j];
            if dt == 0.0 && ds == 0.0 {
                continue; // tied in both: excluded from every count
            } else if dt == 0.0 {
                ties_truth += 1;
            } else if ds == 0.0 {
                ties_scores += 1;
            } else if ds * dt > 0.0 {
                concordant += 1;
            } else {
                discordant += 1;
            }
        }
    }
    if concordant + discordant + ties_scores == 0 {
        return Err(Error::AllTied);
    }
    let p = concordant as f64;
    let q = discordant as f64;
    let t = ties_scores as f64;
    let u = ties_truth as f64;
    let denom = ((p + q + t) * (p + q + u)).sqrt();
    if denom == 0.0 {
        return Err(Error::AllTied);
    }
    Ok((p - q) / denom)
}

/// Gradient of the ranking score with respect to the input: the
/// per-dimension magnitudes identify the features driving the prediction.
pub fn input_attribution(model: &DeepRankModel, x: &FeatureVector) -> Result<Vec<f64>> {
    model.input_gradient(&x.values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{Activation, NetArchitecture};
    use crate::types::{canonicalize_pair, AttributeSpec, RawLabel};
    use std::collections::BTreeMap;

    fn fv(id: &str, values: &[f64]) -> FeatureVector {
        FeatureVector::new(id, values.to_vec()).unwrap()
    }

    fn dataset_1d(strengths: &[(&str, f64)]) -> Dataset {
        let items: BTreeMap<String, FeatureVector> = strengths
            .iter()
            .map(|(id, s)| (id.to_string(), fv(id, &[*s])))
            .collect();
        let attrs = vec![AttributeSpec {
            name: "strength".into(),
            index: 0,
        }];
        Dataset::new(1, items, attrs, BTreeMap::new()).unwrap()
    }

    fn first_coord(x: &FeatureVector) -> Result<f64> {
        Ok(x.values[0])
    }

    #[test]
    fn predict_pair_signs_and_tie() {
        let a = fv("a", &[1.0]);
        let b = fv("b", &[0.5]);
        assert_eq!(predict_pair(first_coord, &a, &b).unwrap(), 1);
        assert_eq!(predict_pair(first_coord, &b, &a).unwrap(), 0);
        assert_eq!(predict_pair(first_coord, &a, &a).unwrap(), 0);
    }

    #[test]
    fn accuracy_mixed_predictions() {
        let ds = dataset_1d(&[("a", 3.0), ("b", 2.0), ("c", 1.0)]);
        // two correct orientations, one deliberately swapped
        let pairs = vec![
            canonicalize_pair("a", "b", RawLabel::FirstStronger),
            canonicalize_pair("b", "c", RawLabel::FirstStronger),
            canonicalize_pair("c", "a", RawLabel::FirstStronger),
        ];
        let report = pairwise_accuracy(first_coord, &pairs, &ds, "strength").unwrap();
        assert_eq!(report.n_ordered_pairs, 3);
        assert_eq!(report.n_correct, 2);
        assert!((report.accuracy - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(report.n_similar_excluded, 0);
    }

    #[test]
    fn accuracy_excludes_similar_pairs() {
        let ds = dataset_1d(&[("a", 2.0), ("b", 1.0), ("c", 1.0)]);
        let pairs = vec![
            canonicalize_pair("a", "b", RawLabel::FirstStronger),
            canonicalize_pair("b", "c", RawLabel::Equal),
            canonicalize_pair("a", "c", RawLabel::Equal),
        ];
        let report = pairwise_accuracy(first_coord, &pairs, &ds, "strength").unwrap();
        assert_eq!(report.n_ordered_pairs, 1);
        assert_eq!(report.n_similar_excluded, 2);
        assert_eq!(report.accuracy, 1.0);
    }

    #[test]
    fn accuracy_all_similar_is_error() {
        let ds = dataset_1d(&[("a", 1.0), ("b", 1.0)]);
        let pairs = vec![canonicalize_pair("a", "b", RawLabel::Equal)];
        assert!(matches!(
            pairwise_accuracy(first_coord, &pairs, &ds, "strength"),
            Err(Error::NoOrderedPairs { excluded: 1 })
        ));
    }

    #[test]
    fn oracle_scorer_is_perfect() {
        let ds = dataset_1d(&[("a", 0.9), ("b", -0.3), ("c", 0.1)]);
        let pairs = vec![
            canonicalize_pair("a", "c", RawLabel::FirstStronger),
            canonicalize_pair("c", "b", RawLabel::FirstStronger),
            canonicalize_pair("a", "b", RawLabel::FirstStronger),
        ];
        let report = pairwise_accuracy(first_coord, &pairs, &ds, "strength").unwrap();
        assert_eq!(report.accuracy, 1.0);
    }

    #[test]
    fn report_line_format() {
        let report = EvalReport {
            attribute: "smiling".into(),
            n_ordered_pairs: 3,
            n_correct: 2,
            accuracy: 2.0 / 3.0,
            n_similar_excluded: 1,
        };
        assert_eq!(report.to_string(), "attr smiling acc 0.6667 correct 2/3 excluded 1");
    }

    #[test]
    fn rank_items_normalized_endpoints() {
        let ds = dataset_1d(&[("a", 3.0), ("b", 1.0)]);
        let ids = vec!["a".to_string(), "b".to_string()];
        let ranked = rank_items(first_coord, &ids, &ds, true).unwrap();
        assert_eq!(ranked, vec![("a".to_string(), 1.0), ("b".to_string(), -1.0)]);
    }

    #[test]
    fn rank_items_degenerate_range_is_zero() {
        let ds = dataset_1d(&[("a", 2.0), ("b", 2.0)]);
        let ids = vec!["b".to_string(), "a".to_string()];
        let ranked = rank_items(first_coord, &ids, &ds, true).unwrap();
        assert!(ranked.iter().all(|(_, s)| *s == 0.0));
        // ties break by id
        assert_eq!(ranked[0].0, "a");
    }

    #[test]
    fn rank_items_empty_is_error() {
        let ds = dataset_1d(&[("a", 1.0)]);
        assert!(matches!(
            rank_items(first_coord, &[], &ds, false),
            Err(Error::EmptyItems)
        ));
    }

    #[test]
    fn kendall_tau_hand_values() {
        assert_eq!(kendall_tau(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]).unwrap(), 1.0);
        assert_eq!(kendall_tau(&[3.0, 2.0, 1.0], &[10.0, 20.0, 30.0]).unwrap(), -1.0);
        let tau = kendall_tau(&[1.0, 2.0, 3.0, 4.0], &[1.0, 2.0, 4.0, 3.0]).unwrap();
        assert!((tau - 4.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn kendall_tau_errors() {
        assert!(matches!(
            kendall_tau(&[1.0, 2.0], &[1.0]),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(matches!(
            kendall_tau(&[1.0, 2.0], &[5.0, 5.0]),
            Err(Error::AllTied)
        ));
    }

    #[test]
    fn monotone_transform_leaves_metrics_unchanged() {
        let ds = dataset_1d(&[("a", 0.3), ("b", -0.2), ("c", 1.5), ("d", 0.9)]);
        let pairs = vec![
            canonicalize_pair("c", "a", RawLabel::FirstStronger),
            canonicalize_pair("a", "b", RawLabel::FirstStronger),
            canonicalize_pair("b", "d", RawLabel::FirstStronger),
        ];
        let transformed = |x: &FeatureVector| -> Result<f64> { Ok((x.values[0] * 2.0).exp()) };
        let r1 = pairwise_accuracy(first_coord, &pairs, &ds, "s").unwrap();
        let r2 = pairwise_accuracy(transformed, &pairs, &ds, "s").unwrap();
        assert_eq!(r1.n_correct, r2.n_correct);
        let ids: Vec<String> = ds.items.keys().cloned().collect();
        let o1: Vec<String> = rank_items(first_coord, &ids, &ds, false)
            .unwrap()
            .into_iter()
            .map(|(id, _)| id)
            .collect();
        let o2: Vec<String> = rank_items(transformed, &ids, &ds, false)
            .unwrap()
            .into_iter()
            .map(|(id, _)| id)
            .collect();
        assert_eq!(o1, o2);
        let raw: Vec<f64> = ids.iter().map(|id| ds.items[id].values[0]).collect();
        let warped: Vec<f64> = raw.iter().map(|v| (v * 2.0).exp()).collect();
        let truth: Vec<f64> = raw.iter().map(|v| v * 10.0).collect();
        assert!((kendall_tau(&raw, &truth).unwrap() - kendall_tau(&warped, &truth).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn counted_correct_pairs_flip_when_swapped() {
        let ds = dataset_1d(&[("a", 1.0), ("b", 0.0)]);
        let fwd = canonicalize_pair("a", "b", RawLabel::FirstStronger);
        let rev = canonicalize_pair("b", "a", RawLabel::FirstStronger);
        let r_fwd = pairwise_accuracy(first_coord, &[fwd], &ds, "s").unwrap();
        let r_rev = pairwise_accuracy(first_coord, &[rev], &ds, "s").unwrap();
        assert_eq!(r_fwd.n_correct + r_rev.n_correct, 1);
    }

    #[test]
    fn attribution_of_linear_model_is_embedding_transpose_times_w() {
        let arch = NetArchitecture {
            input_dim: 2,
            hidden_dims: vec![],
            embedding_dim: 2,
            activation: Activation::ReLU,
        };
        let mut m = DeepRankModel::init(&arch, 0).unwrap();
        m.layers[0].weights = vec![1.0, 2.0, 3.0, 4.0]; // rows [1,2], [3,4]
        m.layers[0].bias = vec![0.0, 0.0];
        m.ranking_weights = vec![0.5, -1.0];
        let expected = [0.5 * 1.0 - 1.0 * 3.0, 0.5 * 2.0 - 1.0 * 4.0];
        for x in [[0.0, 0.0], [1.0, -2.0], [3.5, 0.25]] {
            let a = input_attribution(&m, &fv("x", &x)).unwrap();
            assert!((a[0] - expected[0]).abs() < 1e-12);
            assert!((a[1] - expected[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn attribution_zero_ranking_weights_is_zero() {
        let arch = NetArchitecture {
            input_dim: 3,
            hidden_dims: vec![4],
            embedding_dim: 2,
            activation: Activation::Tanh,
        };
        let mut m = DeepRankModel::init(&arch, 3).unwrap();
        m.ranking_weights = vec![0.0, 0.0];
        let a = input_attribution(&m, &fv("x", &[0.1, 0.2, 0.3])).unwrap();
        assert!(a.iter().all(|v| *v == 0.0));
    }
}
