//! Riemannian descent on the node bases over `SO(n)^v`.
//!
//! Subproblem: `h(O) = Tr(O S O^T K) + beta/2 ||K - O P O^T||_F^2` with
//! `K = L_K(w)` and `P = U (Lambda ⊗ I_n) U^T` held fixed.

use nalgebra::DMatrix;

use crate::graph::NodeBases;
use crate::linalg::{frobenius_inner, qr_retraction, skew};

use super::hyper::{Hyperparams, OStepParams};
use super::state::SolverState;

/// Euclidean gradient of `h` with respect to a dense `vn x vn` matrix `O`:
/// `G = 2 K O S - 2 beta (K - O P O^T) O P`.
pub fn euclidean_gradient_o(
    k: &DMatrix<f64>,
    o: &DMatrix<f64>,
    s: &DMatrix<f64>,
    p: &DMatrix<f64>,
    beta: f64,
) -> DMatrix<f64> {
    let op = o * p;
    let resid = k - &op * o.transpose();
    (k * o * s) * 2.0 - (resid * op) * (2.0 * beta)
}

/// `h` for a dense `O`; used by tests and finite-difference checks.
pub fn o_subproblem_dense(k: &DMatrix<f64>, o: &DMatrix<f64>, s: &DMatrix<f64>, p: &DMatrix<f64>, beta: f64) -> f64 {
    let sc = o * s * o.transpose();
    let pc = o * p * o.transpose();
    frobenius_inner(&sc, k) + 0.5 * beta * (k - pc).norm_squared()
}

/// Subproblem data shared across line-search evaluations.
struct OProblem<'a> {
    k: DMatrix<f64>,
    s: &'a DMatrix<f64>,
    p: DMatrix<f64>,
    beta: f64,
    n: usize,
}

impl OProblem<'_> {
    fn value(&self, bases: &NodeBases) -> f64 {
        let sc = bases.conjugate(self.s);
        let pc = bases.conjugate(&self.p);
        frobenius_inner(&sc, &self.k) + 0.5 * self.beta * (&self.k - pc).norm_squared()
    }

    /// Diagonal `n x n` blocks of the Euclidean gradient.
    fn gradient_blocks(&self, bases: &NodeBases) -> Vec<DMatrix<f64>> {
        let n = self.n;
        let os = bases.left_mul(self.s, false);
        let op = bases.left_mul(&self.p, false);
        let resid = &self.k - bases.right_mul_t(&op, false);
        (0..bases.len())
            .map(|i| {
                let ks = self.k.rows(i * n, n) * os.columns(i * n, n);
                let rp = resid.rows(i * n, n) * op.columns(i * n, n);
                ks * 2.0 - rp * (2.0 * self.beta)
            })
            .collect()
    }
}

/// Riemannian gradient on `SO(n)^v`: `O_v skew(O_v^T G_v)` per block.
pub fn riemannian_gradient(bases: &NodeBases, euclid_blocks: &[DMatrix<f64>]) -> Vec<DMatrix<f64>> {
    bases
        .blocks()
        .iter()
        .zip(euclid_blocks)
        .map(|(o, g)| o * skew(&o.tr_mul(g)))
        .collect()
}

fn retract(bases: &NodeBases, direction: &[DMatrix<f64>], step: f64) -> NodeBases {
    let blocks = bases
        .blocks()
        .iter()
        .zip(direction)
        .map(|(o, d)| qr_retraction(&(o - d * step)))
        .collect();
    NodeBases::from_blocks_unchecked(bases.dim(), blocks)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OStepInfo {
    pub inner_iters: usize,
    /// Riemannian gradient norm at the returned point.
    pub grad_norm: f64,
    /// Set when backtracking failed to find a decrease.
    pub stalled: bool,
    pub start_value: f64,
    pub end_value: f64,
}

/// Projected Riemannian gradient descent with Armijo backtracking.
pub fn update_o(state: &SolverState, hp: &Hyperparams) -> (NodeBases, OStepInfo) {
    let problem = OProblem {
        k: state.kron(),
        s: &state.s,
        p: state.spectral_model(),
        beta: hp.beta,
        n: state.n,
    };
    descend(&problem, state.bases.clone(), &hp.o_step)
}

fn descend(problem: &OProblem<'_>, mut bases: NodeBases, params: &OStepParams) -> (NodeBases, OStepInfo) {
    let mut value = problem.value(&bases);
    let start_value = value;
    let mut info = OStepInfo { inner_iters: 0, grad_norm: 0.0, stalled: false, start_value, end_value: value };
    if problem.n == 1 {
        return (bases, info);
    }
    for iter in 0..params.max_inner_iters {
        let grad = riemannian_gradient(&bases, &problem.gradient_blocks(&bases));
        let norm_sq: f64 = grad.iter().map(|g| g.norm_squared()).sum();
        info.grad_norm = norm_sq.sqrt();
        if info.grad_norm < params.grad_tol {
            break;
        }
        let mut step = params.initial_step;
        let mut accepted = None;
        for _ in 0..=params.max_backtracks {
            let trial = retract(&bases, &grad, step);
            let trial_value = problem.value(&trial);
            if trial_value <= value - params.sufficient_decrease * step * norm_sq {
                accepted = Some((trial, trial_value));
                break;
            }
            step *= params.contraction;
        }
        match accepted {
            Some((b, val)) => {
                bases = b;
                value = val;
                info.inner_iters = iter + 1;
            }
            None => {
                info.stalled = true;
                break;
            }
        }
    }
    info.end_value = value;
    (bases, info)
}

#[cfg(test)]
pub(crate) fn o_subproblem(state: &SolverState, bases: &NodeBases, beta: f64) -> f64 {
    OProblem { k: state.kron(), s: &state.s, p: state.spectral_model(), beta, n: state.n }.value(bases)
}

#[cfg(test)]
pub(crate) fn gradient_blocks_for(state: &SolverState, beta: f64) -> Vec<DMatrix<f64>> {
    OProblem { k: state.kron(), s: &state.s, p: state.spectral_model(), beta, n: state.n }.gradient_blocks(&state.bases)
}
