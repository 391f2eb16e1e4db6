//! Property tests for the invariants the rest of the crate leans on.

use proptest::prelude::*;

use relrank::eval;
use relrank::linear;
use relrank::net::{Activation, DeepRankModel, NetArchitecture};
use relrank::types::{canonicalize_pair, LossConfig, RawLabel, Relation};

fn deltas(d: usize, n: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    proptest::collection::vec(proptest::collection::vec(-2.0..2.0f64, d), n)
}

proptest! {
    /// Canonical pairs are always stronger-first; SecondStronger swaps,
    /// Equal maps to Similar, and the result is a fixed point.
    #[test]
    fn canonicalization_is_stronger_first_and_idempotent(
        a in "[a-z]{1,8}",
        b in "[a-z]{1,8}",
        label in prop_oneof![
            Just(RawLabel::FirstStronger),
            Just(RawLabel::SecondStronger),
            Just(RawLabel::Equal),
        ],
    ) {
        let p = canonicalize_pair(a.clone(), b.clone(), label);
        match label {
            RawLabel::FirstStronger => {
                prop_assert_eq!(&p.first, &a);
                prop_assert_eq!(&p.second, &b);
                prop_assert_eq!(p.relation, Relation::Ordered);
            }
            RawLabel::SecondStronger => {
                prop_assert_eq!(&p.first, &b);
                prop_assert_eq!(&p.second, &a);
                prop_assert_eq!(p.relation, Relation::Ordered);
            }
            RawLabel::Equal => prop_assert_eq!(p.relation, Relation::Similar),
        }
        let again = canonicalize_pair(
            p.first.clone(),
            p.second.clone(),
            match p.relation {
                Relation::Ordered => RawLabel::FirstStronger,
                Relation::Similar => RawLabel::Equal,
            },
        );
        prop_assert_eq!(again, p);
    }

    /// J(w) is convex: midpoint value never exceeds the chord average
    /// (up to rounding) for any instance and any pair of points.
    #[test]
    fn objective_is_convex_along_segments(
        ordered in deltas(3, 4),
        similar in deltas(3, 2),
        wa in proptest::collection::vec(-3.0..3.0f64, 3),
        wb in proptest::collection::vec(-3.0..3.0f64, 3),
    ) {
        let cfg = LossConfig::default();
        let mid: Vec<f64> = wa.iter().zip(&wb).map(|(x, y)| 0.5 * (x + y)).collect();
        let ja = linear::objective(&wa, &ordered, &similar, &cfg).unwrap();
        let jb = linear::objective(&wb, &ordered, &similar, &cfg).unwrap();
        let jm = linear::objective(&mid, &ordered, &similar, &cfg).unwrap();
        prop_assert!(jm <= 0.5 * (ja + jb) + 1e-9 * (1.0 + ja.abs() + jb.abs()));
    }

    /// The Siamese pair output is antisymmetric under argument swap.
    #[test]
    fn pair_output_is_antisymmetric(
        seed in 0u64..50,
        a in proptest::collection::vec(-2.0..2.0f64, 4),
        b in proptest::collection::vec(-2.0..2.0f64, 4),
        tanh in any::<bool>(),
    ) {
        let arch = NetArchitecture {
            input_dim: 4,
            hidden_dims: vec![6],
            embedding_dim: 3,
            activation: if tanh { Activation::Tanh } else { Activation::ReLU },
        };
        let m = DeepRankModel::init(&arch, seed).unwrap();
        let (ab, _) = m.pair_forward(&a, &b).unwrap();
        let (ba, _) = m.pair_forward(&b, &a).unwrap();
        prop_assert!((ab + ba).abs() <= 1e-12 * (1.0 + ab.abs()));
    }

    /// Kendall tau lands in [-1, 1], is 1 against itself, and -1 against
    /// its negation (given distinct values).
    #[test]
    fn kendall_tau_bounds_and_extremes(
        pairs in proptest::collection::vec((-10.0..10.0f64, -10.0..10.0f64), 2..20),
    ) {
        let (scores, truth): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let distinct = |v: &[f64]| v.iter().any(|x| (x - v[0]).abs() > 1e-9);
        prop_assume!(distinct(&scores) && distinct(&truth));
        let tau = eval::kendall_tau(&scores, &truth).unwrap();
        prop_assert!((-1.0..=1.0).contains(&tau));
        let self_tau = eval::kendall_tau(&truth, &truth).unwrap();
        prop_assert!((self_tau - 1.0).abs() < 1e-12);
        let neg: Vec<f64> = truth.iter().map(|x| -x).collect();
        let neg_tau = eval::kendall_tau(&neg, &truth).unwrap();
        prop_assert!((neg_tau + 1.0).abs() < 1e-12);
    }
}
