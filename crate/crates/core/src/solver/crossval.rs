//! K-fold selection of `(alpha, beta)` by held-out pseudo-likelihood.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{frobenius_inner, kernel_threshold, log_gdet, sym_eigenvalues};

use super::fit::{covariance, fit, Method};
use super::hyper::Hyperparams;

#[derive(Debug, Clone)]
pub struct CrossValidation {
    pub best: Hyperparams,
    pub best_index: usize,
    /// Mean validation score per grid point, in grid order.
    pub scores: Vec<f64>,
}

/// Unpenalized held-out score `-log gdet(L) + Tr(S_val L)`.
pub fn validation_score(laplacian: &DMatrix<f64>, s_val: &DMatrix<f64>, zero_tol: f64) -> Result<f64> {
    let eig = sym_eigenvalues(laplacian);
    let thr = kernel_threshold(&eig, zero_tol);
    Ok(-log_gdet(eig.as_slice(), thr)? + frobenius_inner(s_val, laplacian))
}

/// Assigns sample columns to folds after a seeded shuffle.
pub fn fold_assignment(samples: usize, folds: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..samples).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut fold = vec![0; samples];
    for (pos, &col) in order.iter().enumerate() {
        fold[col] = pos % folds;
    }
    fold
}

fn select_columns(x: &DMatrix<f64>, cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(x.nrows(), cols.len(), |r, c| x[(r, cols[c])])
}

/// Scores every `(alpha, beta)` grid point by mean validation score over
/// `folds` folds; ties keep the earliest grid point.
pub fn cross_validate(
    x: &DMatrix<f64>,
    v: usize,
    n: usize,
    grid: &[(f64, f64)],
    folds: usize,
    base: &Hyperparams,
    method: Method,
    seed: u64,
) -> Result<CrossValidation> {
    if grid.is_empty() {
        return Err(Error::Config("empty hyperparameter grid".into()));
    }
    let m = x.ncols();
    if folds < 2 || m < folds {
        return Err(Error::Config(format!("need M >= folds >= 2, got M = {m}, folds = {folds}")));
    }
    if grid.len() == 1 {
        let (alpha, beta) = grid[0];
        return Ok(CrossValidation { best: Hyperparams { alpha, beta, ..*base }, best_index: 0, scores: vec![f64::NAN] });
    }
    let assignment = fold_assignment(m, folds, seed);
    let splits = (0..folds)
        .map(|f| {
            let train: Vec<usize> = (0..m).filter(|c| assignment[*c] != f).collect();
            let val: Vec<usize> = (0..m).filter(|c| assignment[*c] == f).collect();
            let s_train = covariance(&select_columns(x, &train))?;
            let xv = select_columns(x, &val);
            let s_val = &xv * xv.transpose() / val.len() as f64;
            Ok((s_train, s_val))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut scores = Vec::with_capacity(grid.len());
    for &(alpha, beta) in grid {
        let hp = Hyperparams { alpha, beta, ..*base };
        let mut total = 0.0;
        for (s_train, s_val) in &splits {
            let res = fit(s_train, v, n, &hp, method)?;
            total += validation_score(res.laplacian.matrix(), s_val, hp.zero_tol)?;
        }
        scores.push(total / folds as f64);
    }
    let mut best_index = 0;
    for (idx, s) in scores.iter().enumerate() {
        if *s < scores[best_index] {
            best_index = idx;
        }
    }
    let (alpha, beta) = grid[best_index];
    Ok(CrossValidation { best: Hyperparams { alpha, beta, ..*base }, best_index, scores })
}
