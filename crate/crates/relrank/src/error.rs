use std::io;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite value in {context}")]
    NonFinite { context: String },
    #[error("unknown item id `{0}`")]
    UnknownItem(String),
    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),
    #[error("no pairs supplied")]
    EmptyPairs,
    #[error("no items supplied")]
    EmptyItems,
    #[error("empty batch")]
    EmptyBatch,
    #[error("no ordered pairs to evaluate ({excluded} similar pairs excluded)")]
    NoOrderedPairs { excluded: usize },
    #[error("inputs have mismatched lengths: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("ground truth is entirely tied; rank correlation is undefined")]
    AllTied,
    #[error(
        "did not converge within {iters} iterations \
         (grad inf-norm {grad_norm:.3e}, best objective {objective:.6e})"
    )]
    DidNotConverge {
        iters: usize,
        grad_norm: f64,
        objective: f64,
    },
    #[error("brute-force grid search supports d <= 3, got d = {0}")]
    GridDimension(usize),
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },
    #[error("model file, line {line}: {msg}")]
    ModelFormat { line: usize, msg: String },
    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },
    #[error("could not satisfy requested pair counts after {attempts} draws")]
    UnsatisfiablePairs { attempts: usize },
    #[error("stale forward cache: shapes do not match the model")]
    StaleCache,
    #[error("gradient check failed: max relative error {error:.3e} exceeds {threshold:.1e}")]
    GradCheckFailed { error: f64, threshold: f64 },
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
