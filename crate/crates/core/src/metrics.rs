//! Evaluation metrics comparing an estimated Laplacian to ground truth.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{kernel_threshold, sym_eigen, sym_eigenvalues};

pub const DEFAULT_EDGE_EPS: f64 = 1e-4;
pub const DEFAULT_ZERO_TOL: f64 = 1e-8;

/// Edge-support F1. Predicted edges are `w_hat > eps`, true edges `w_true > 0`.
pub fn f1_sparsity(w_hat: &DVector<f64>, w_true: &DVector<f64>, eps: f64) -> Result<f64> {
    if w_hat.len() != w_true.len() {
        return Err(Error::dims(w_true.len(), w_hat.len()));
    }
    let (mut tp, mut fp, mut fneg) = (0usize, 0usize, 0usize);
    for (h, t) in w_hat.iter().zip(w_true.iter()) {
        match (*h > eps, *t > 0.0) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fneg += 1,
            (false, false) => {}
        }
    }
    if tp + fp + fneg == 0 {
        return Ok(1.0);
    }
    Ok(2.0 * tp as f64 / (2 * tp + fp + fneg) as f64)
}

/// Mean squared weight error over every node pair.
pub fn weight_mse(w_hat: &DVector<f64>, w_true: &DVector<f64>) -> Result<f64> {
    if w_hat.len() != w_true.len() {
        return Err(Error::dims(w_true.len(), w_hat.len()));
    }
    if w_true.is_empty() {
        return Ok(0.0);
    }
    Ok((w_hat - w_true).norm_squared() / w_true.len() as f64)
}

/// `Tr(L Y Y^T) / M` for column samples `Y`.
pub fn empirical_tv(laplacian: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<f64> {
    if y.ncols() == 0 {
        return Err(Error::arg("empirical total variation needs at least one sample"));
    }
    if laplacian.nrows() != y.nrows() || !laplacian.is_square() {
        return Err(Error::dims(laplacian.nrows(), y.nrows()));
    }
    Ok((laplacian * y).component_mul(y).sum() / y.ncols() as f64)
}

/// Mean absolute difference of the ascending spectra.
pub fn spectral_distance(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::dims(a.nrows(), b.nrows()));
    }
    let (ea, eb) = (sym_eigenvalues(a), sym_eigenvalues(b));
    if ea.is_empty() {
        return Ok(0.0);
    }
    Ok((ea - eb).abs().sum() / a.nrows() as f64)
}

fn kernel_basis(a: &DMatrix<f64>, zero_tol: f64) -> Result<DMatrix<f64>> {
    let eig = sym_eigen(a);
    let thr = kernel_threshold(&eig.values, zero_tol);
    if eig.values.len() > 0 && eig.values[0] < -thr.max(1e-8 * eig.max_abs()) {
        return Err(Error::NotPsd { min_eig: eig.values[0] });
    }
    let k = eig.values.iter().filter(|x| **x < thr).count();
    Ok(eig.vectors.columns(0, k).into_owned())
}

/// Long-time average of `||exp(-tA) - exp(-tB)||_F^2`, which reduces to the
/// squared distance between the kernel projectors.
pub fn heat_distance(a: &DMatrix<f64>, b: &DMatrix<f64>, zero_tol: f64) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::dims(a.nrows(), b.nrows()));
    }
    let va = kernel_basis(a, zero_tol)?;
    let vb = kernel_basis(b, zero_tol)?;
    let overlap = va.tr_mul(&vb).norm_squared();
    Ok((va.ncols() + vb.ncols()) as f64 - 2.0 * overlap)
}

/// Number of eigenvalues below `zero_tol * max(lambda_max, 1)`.
pub fn kernel_dimension(a: &DMatrix<f64>, zero_tol: f64) -> usize {
    let values = sym_eigenvalues(a);
    let thr = kernel_threshold(&values, zero_tol);
    values.iter().filter(|x| **x < thr).count()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub f1: f64,
    pub weight_mse: f64,
    pub empirical_tv: f64,
    pub spectral_distance: f64,
    pub heat_distance: f64,
    pub kernel_dim_est: usize,
    pub kernel_dim_true: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOptions {
    pub eps_edge: f64,
    pub zero_tol: f64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self { eps_edge: DEFAULT_EDGE_EPS, zero_tol: DEFAULT_ZERO_TOL }
    }
}

/// Scores an estimate `(l_hat, w_hat)` against `(l_true, w_true)` using the
/// held-out samples `test`.
pub fn evaluate(
    l_hat: &DMatrix<f64>,
    w_hat: &DVector<f64>,
    l_true: &DMatrix<f64>,
    w_true: &DVector<f64>,
    test: &DMatrix<f64>,
    opts: &EvalOptions,
) -> Result<EvalReport> {
    if l_hat.shape() != l_true.shape() {
        return Err(Error::dims(l_true.nrows(), l_hat.nrows()));
    }
    Ok(EvalReport {
        f1: f1_sparsity(w_hat, w_true, opts.eps_edge)?,
        weight_mse: weight_mse(w_hat, w_true)?,
        empirical_tv: empirical_tv(l_hat, test)?,
        spectral_distance: spectral_distance(l_true, l_hat)?,
        heat_distance: heat_distance(l_true, l_hat, opts.zero_tol)?,
        kernel_dim_est: kernel_dimension(l_hat, opts.zero_tol),
        kernel_dim_true: kernel_dimension(l_true, opts.zero_tol),
    })
}

/// One results-CSV row: run coordinates followed by the metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub seed: u64,
    pub method: String,
    pub family: String,
    pub v: usize,
    pub n: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub r: f64,
    pub alpha: f64,
    pub beta: f64,
    #[serde(flatten)]
    pub report: EvalReport,
    pub wall_time_s: f64,
}

impl ResultRow {
    pub const HEADER: &'static str = "seed,method,family,v,n,M,r,alpha,beta,f1,weight_mse,empirical_tv,spectral_dist,heat_dist,kernel_dim_est,kernel_dim_true,wall_time_s";
}

impl fmt::Display for ResultRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = &self.report;
        write!(
            f,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.seed,
            self.method,
            self.family,
            self.v,
            self.n,
            self.m,
            self.r,
            self.alpha,
            self.beta,
            r.f1,
            r.weight_mse,
            r.empirical_tv,
            r.spectral_distance,
            r.heat_distance,
            r.kernel_dim_est,
            r.kernel_dim_true,
            self.wall_time_s
        )
    }
}
