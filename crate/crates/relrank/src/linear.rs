//! Convex rank-SVM solver with identity features.
//!
//! Minimizes
//!
//! ```text
//! J(w) = 1/2 ||w||^2 + c1 * sum_ordered max(0, 1 - w.d)^2 + c2 * sum_similar (w.d)^2
//! ```
//!
//! where each `d` is a precomputed difference `x_first - x_second`. The
//! squared hinge makes J once-differentiable, so plain gradient descent
//! with a backtracking line search converges to the global minimum.
//! There is no bias term anywhere in the model.

use crate::error::{Error, Result};
use crate::types::{Dataset, LossConfig, PairConstraint, Relation};

/// Weight vector of the linear ranker, plus the objective value it was
/// left at. Bias-free by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearRankModel {
    pub weights: Vec<f64>,
    pub loss_config: LossConfig,
    pub training_objective: f64,
}

impl LinearRankModel {
    pub fn score(&self, x: &[f64]) -> Result<f64> {
        dot_checked(&self.weights, x)
    }
}

fn dot_checked(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    Ok(a.iter().zip(b).map(|(x, y)| x * y).sum())
}

fn check_dims(w: &[f64], deltas: &[Vec<f64>]) -> Result<()> {
    for d in deltas {
        if d.len() != w.len() {
            return Err(Error::DimensionMismatch {
                expected: w.len(),
                got: d.len(),
            });
        }
    }
    Ok(())
}

/// Evaluates J(w) on precomputed pair differences.
pub fn objective(
    w: &[f64],
    ordered_deltas: &[Vec<f64>],
    similar_deltas: &[Vec<f64>],
    cfg: &LossConfig,
) -> Result<f64> {
    check_dims(w, ordered_deltas)?;
    check_dims(w, similar_deltas)?;
    let mut j = 0.5 * w.iter().map(|x| x * x).sum::<f64>();
    for d in ordered_deltas {
        let margin = 1.0 - dot_checked(w, d)?;
        if margin > 0.0 {
            j += cfg.c1 * margin * margin;
        }
    }
    for d in similar_deltas {
        let s = dot_checked(w, d)?;
        j += cfg.c2 * s * s;
    }
    Ok(j)
}

/// Analytic gradient of [`objective`].
///
/// At the hinge boundary (margin exactly 0) the pair's contribution is 0;
/// the squared hinge is differentiable there with derivative 0.
pub fn objective_gradient(
    w: &[f64],
    ordered_deltas: &[Vec<f64>],
    similar_deltas: &[Vec<f64>],
    cfg: &LossConfig,
) -> Result<Vec<f64>> {
    check_dims(w, ordered_deltas)?;
    check_dims(w, similar_deltas)?;
    let mut g = w.to_vec();
    for d in ordered_deltas {
        let margin = 1.0 - dot_checked(w, d)?;
        if margin > 0.0 {
            let coeff = -2.0 * cfg.c1 * margin;
            for (gk, dk) in g.iter_mut().zip(d) {
                *gk += coeff * dk;
            }
        }
    }
    for d in similar_deltas {
        let coeff = 2.0 * cfg.c2 * dot_checked(w, d)?;
        for (gk, dk) in g.iter_mut().zip(d) {
            *gk += coeff * dk;
        }
    }
    Ok(g)
}

/// Splits a pair list into ordered and similar difference vectors
/// `x_first - x_second`.
pub fn pair_deltas(
    pairs: &[PairConstraint],
    dataset: &Dataset,
) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let mut ordered = Vec::new();
    let mut similar = Vec::new();
    for p in pairs {
        let xi = dataset.features(&p.first)?;
        let xj = dataset.features(&p.second)?;
        let delta: Vec<f64> = xi
            .values
            .iter()
            .zip(&xj.values)
            .map(|(a, b)| a - b)
            .collect();
        match p.relation {
            Relation::Ordered => ordered.push(delta),
            Relation::Similar => similar.push(delta),
        }
    }
    Ok((ordered, similar))
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITERS: usize = 100_000;

/// Full-batch gradient descent with a backtracking line search: starting
/// from w = 0, halve the step (initial 1.0) until J decreases, stop once
/// the gradient inf-norm falls below `tol`. The objective is convex, so
/// the returned stationary point is the global minimum.
pub fn solve(
    pairs: &[PairConstraint],
    dataset: &Dataset,
    cfg: &LossConfig,
    tol: f64,
    max_iters: usize,
) -> Result<LinearRankModel> {
    if pairs.is_empty() {
        return Err(Error::EmptyPairs);
    }
    if tol <= 0.0 {
        return Err(Error::Config(format!("tol must be positive, got {tol}")));
    }
    let (ordered, similar) = pair_deltas(pairs, dataset)?;
    let mut w = vec![0.0; dataset.dimension];
    let mut j = objective(&w, &ordered, &similar, cfg)?;
    for _ in 0..max_iters {
        let g = objective_gradient(&w, &ordered, &similar, cfg)?;
        let gnorm = inf_norm(&g);
        if gnorm <= tol {
            return Ok(LinearRankModel {
                weights: w,
                loss_config: *cfg,
                training_objective: j,
            });
        }
        let mut step = 1.0;
        loop {
            let candidate: Vec<f64> = w.iter().zip(&g).map(|(wk, gk)| wk - step * gk).collect();
            let j_new = objective(&candidate, &ordered, &similar, cfg)?;
            if j_new < j {
                w = candidate;
                j = j_new;
                break;
            }
            step *= 0.5;
            if step < 1e-300 {
                return Err(Error::DidNotConverge {
                    iters: max_iters,
                    grad_norm: gnorm,
                    objective: j,
                });
            }
        }
    }
    let g = objective_gradient(&w, &ordered, &similar, cfg)?;
    Err(Error::DidNotConverge {
        iters: max_iters,
        grad_norm: inf_norm(&g),
        objective: j,
    })
}

/// Exhaustive grid-search oracle for d <= 3: returns the grid point of
/// `[-grid_bounds, +grid_bounds]^d` (spacing `grid_step`) minimizing
/// [`objective`]. Test support only; independent of [`solve`].
pub fn brute_force_solve(
    pairs: &[PairConstraint],
    dataset: &Dataset,
    cfg: &LossConfig,
    grid_bounds: f64,
    grid_step: f64,
) -> Result<Vec<f64>> {
    let d = dataset.dimension;
    if d > 3 {
        return Err(Error::GridDimension(d));
    }
    let (ordered, similar) = pair_deltas(pairs, dataset)?;
    let steps = (2.0 * grid_bounds / grid_step).round() as usize + 1;
    let coord = |i: usize| -grid_bounds + i as f64 * grid_step;
    let mut best = vec![0.0; d];
    let mut best_j = f64::INFINITY;
    let mut w = vec![0.0; d];
    let mut idx = vec![0usize; d];
    loop {
        for (k, &i) in idx.iter().enumerate() {
            w[k] = coord(i);
        }
        let j = objective(&w, &ordered, &similar, cfg)?;
        if j < best_j {
            best_j = j;
            best.copy_from_slice(&w);
        }
        // odometer over the grid
        let mut k = 0;
        loop {
            if k == d {
                return Ok(best);
            }
            idx[k] += 1;
            if idx[k] < steps {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}
