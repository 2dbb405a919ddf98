use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::graph::NodeBases;
use crate::linalg::orthogonality_defect;
use crate::operator::kron_laplacian_unchecked;

use super::hyper::Hyperparams;

/// Iterates of the block-coordinate solver.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub v: usize,
    pub n: usize,
    /// Edge weights in canonical order.
    pub w: DVector<f64>,
    pub bases: NodeBases,
    /// `vn x n(v-1)` eigenvector block with orthonormal columns.
    pub u: DMatrix<f64>,
    /// Nonzero graph eigenvalues `lambda_2 <= ... <= lambda_v`.
    pub lambda: DVector<f64>,
    /// Empirical covariance.
    pub s: DMatrix<f64>,
    pub iteration: usize,
    pub history: Vec<f64>,
}

impl SolverState {
    /// `L_K(w)`.
    pub fn kron(&self) -> DMatrix<f64> {
        kron_laplacian_unchecked(&self.w, self.v, self.n)
    }

    /// Current connection Laplacian `O^T L_K(w) O`.
    pub fn laplacian(&self) -> DMatrix<f64> {
        self.bases.conjugate_t(&self.kron())
    }

    /// `lambda ⊗ 1_n`, the diagonal of `Lambda ⊗ I_n`.
    pub fn expanded_lambda(&self) -> DVector<f64> {
        expand(&self.lambda, self.n)
    }

    /// Spectral model `U (Lambda ⊗ I_n) U^T`.
    pub fn spectral_model(&self) -> DMatrix<f64> {
        spectral_model(&self.u, &self.lambda, self.n)
    }

    /// Checks every feasibility invariant at tolerance `tol`.
    pub fn check_invariants(&self, hp: &Hyperparams, tol: f64) -> Result<()> {
        if let Some(x) = self.w.iter().find(|x| **x < 0.0) {
            return Err(Error::Domain(format!("negative weight {x}")));
        }
        let k = self.u.ncols();
        let stiefel = (self.u.tr_mul(&self.u) - DMatrix::<f64>::identity(k, k)).amax();
        if stiefel > tol {
            return Err(Error::Domain(format!("U is not orthonormal (defect {stiefel:e})")));
        }
        for (i, b) in self.bases.blocks().iter().enumerate() {
            let d = orthogonality_defect(b);
            if d > tol || (b.determinant() - 1.0).abs() > tol {
                return Err(Error::Domain(format!("basis {i} left SO(n) (defect {d:e})")));
            }
        }
        for (idx, pair) in self.lambda.as_slice().windows(2).enumerate() {
            if pair[1] < pair[0] - tol {
                return Err(Error::Domain(format!("lambda not monotone at {idx}")));
            }
        }
        let lo = self.lambda.min();
        let hi = self.lambda.max();
        if lo < hp.c1 - tol || hi > hp.c2 + tol {
            return Err(Error::Domain(format!("lambda outside [{}, {}]: [{lo}, {hi}]", hp.c1, hp.c2)));
        }
        Ok(())
    }
}

pub(crate) fn expand(lambda: &DVector<f64>, n: usize) -> DVector<f64> {
    DVector::from_iterator(lambda.len() * n, lambda.iter().flat_map(|x| std::iter::repeat_n(*x, n)))
}

pub(crate) fn spectral_model(u: &DMatrix<f64>, lambda: &DVector<f64>, n: usize) -> DMatrix<f64> {
    let d = expand(lambda, n);
    let mut scaled = u.clone();
    for (c, x) in d.iter().enumerate() {
        let mut col = scaled.column_mut(c);
        col *= *x;
    }
    scaled * u.transpose()
}
