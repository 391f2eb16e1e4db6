//! Pairwise learning-to-rank for relative attributes.
//!
//! An attribute is ranked, not detected: annotations say which of two
//! items shows it more strongly (ordered pairs) or that both show it
//! about equally (similar pairs). This crate trains scorers from such
//! pairs with a margin-based squared-hinge loss over score differences,
//! in two forms:
//!
//! * [`linear`] — a convex rank-SVM solver over raw features, solved by
//!   gradient descent with a backtracking line search. Serves both as a
//!   usable linear ranker and as the ground-truth reference for the deep
//!   loss.
//! * [`net`] + [`trainer`] — a Siamese feed-forward network that learns
//!   the representation and the bias-free ranking weights jointly, with
//!   hand-written backpropagation, RMSProp updates, and a
//!   finite-difference gradient checker.
//!
//! [`eval`] provides the pairwise-accuracy metric (similar pairs
//! excluded), global ranking induction, Kendall tau against known ground
//! truth, and input-gradient attribution. [`data`] generates synthetic
//! datasets with known latent strengths and reads/writes the feature,
//! pair, and truth file formats. [`cli`] wires everything into the
//! `relrank` binary.
//!
//! See the `examples/` directory for one runnable example per
//! capability.

pub mod cli;
pub mod data;
pub mod error;
pub mod eval;
pub mod linear;
pub mod net;
pub mod trainer;
pub mod types;

pub use error::{Error, Result};
