use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Armijo backtracking controls for the Riemannian descent on node bases.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OStepParams {
    pub initial_step: f64,
    pub contraction: f64,
    pub sufficient_decrease: f64,
    pub max_backtracks: usize,
    pub max_inner_iters: usize,
    /// Stop once the Riemannian gradient norm falls below this value.
    pub grad_tol: f64,
}

impl Default for OStepParams {
    fn default() -> Self {
        Self {
            initial_step: 1.0,
            contraction: 0.5,
            sufficient_decrease: 1e-4,
            max_backtracks: 30,
            max_inner_iters: 50,
            grad_tol: 1e-8,
        }
    }
}

/// Starting point for the node bases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasesInit {
    /// `O_v = I_n` for every node.
    Identity,
    /// Synchronize the `n` lowest-variance directions of the covariance.
    #[default]
    Spectral,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparams {
    /// Weight of the l1 sparsity term on edge weights.
    pub alpha: f64,
    /// Weight of the consistency penalty tying the Laplacian to its spectral model.
    pub beta: f64,
    /// Lower bound on the nonzero graph eigenvalues.
    pub c1: f64,
    /// Upper bound on the graph eigenvalues.
    pub c2: f64,
    pub max_outer_iters: usize,
    /// Majorization-minimization steps on the weights per outer iteration.
    pub w_inner_iters: usize,
    /// Stop when the relative objective change drops below this.
    pub rel_tol: f64,
    pub o_step: OStepParams,
    pub bases_init: BasesInit,
    /// Relative threshold for treating eigenvalues as zero.
    pub zero_tol: f64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            alpha: 0.0,
            beta: 10.0,
            c1: 1e-2,
            c2: 1e2,
            max_outer_iters: 500,
            w_inner_iters: 1,
            rel_tol: 1e-6,
            o_step: OStepParams::default(),
            bases_init: BasesInit::default(),
            zero_tol: 1e-8,
        }
    }
}

impl Hyperparams {
    pub fn with_penalties(alpha: f64, beta: f64) -> Self {
        Self { alpha, beta, ..Self::default() }
    }

    /// Settings used for the recovery experiments: a moderate `beta`, many
    /// cheap outer passes with repeated weight steps and a short basis
    /// descent per pass.
    pub fn experiment() -> Self {
        Self {
            alpha: 0.0,
            beta: 2.0,
            max_outer_iters: 8000,
            w_inner_iters: 50,
            rel_tol: 1e-9,
            o_step: OStepParams { max_inner_iters: 5, ..OStepParams::default() },
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0) {
            return Err(Error::Config(format!("alpha must be >= 0, got {}", self.alpha)));
        }
        if !(self.beta > 0.0) {
            return Err(Error::Config(format!("beta must be > 0, got {}", self.beta)));
        }
        if !(self.c1 > 0.0 && self.c1 <= self.c2) {
            return Err(Error::Config(format!("need 0 < c1 <= c2, got c1 = {}, c2 = {}", self.c1, self.c2)));
        }
        if self.w_inner_iters == 0 {
            return Err(Error::Config("w_inner_iters must be at least 1".into()));
        }
        if !(self.rel_tol > 0.0 && self.zero_tol > 0.0 && self.o_step.grad_tol > 0.0) {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        let o = &self.o_step;
        if !(o.initial_step > 0.0 && o.contraction > 0.0 && o.contraction < 1.0 && o.sufficient_decrease > 0.0 && o.sufficient_decrease < 1.0) {
            return Err(Error::Config("invalid line-search parameters".into()));
        }
        Ok(())
    }
}
