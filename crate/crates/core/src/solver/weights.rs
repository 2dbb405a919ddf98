//! Majorization-minimization step on the edge weights.

use nalgebra::{DMatrix, DVector};

use crate::index::EdgeIndexMap;
use crate::operator::{kron_laplacian_adjoint_unchecked, kron_laplacian_unchecked, lipschitz_constant};

use super::hyper::Hyperparams;
use super::state::SolverState;

/// Residual `f(w) = L_K(w) - O [U (Lambda ⊗ I) U^T - S / beta] O^T` whose
/// adjoint image is the gradient of the beta-scaled weight subproblem.
pub fn weight_residual(state: &SolverState, beta: f64) -> DMatrix<f64> {
    let target = state.spectral_model() - &state.s / beta;
    state.kron() - state.bases.conjugate(&target)
}

/// Projected proximal-gradient steps with step size `1 / (2 n v)`:
/// `w <- max(0, w - grad / tau - alpha / (beta tau))`, repeated
/// `hp.w_inner_iters` times against the same target. Each step minimizes a
/// majorizer of the weight subproblem, so every repetition is a descent step.
pub fn update_w(state: &SolverState, hp: &Hyperparams) -> DVector<f64> {
    let (v, n) = (state.v, state.n);
    let tau = lipschitz_constant(v, n);
    let target = state.bases.conjugate(&(state.spectral_model() - &state.s / hp.beta));
    // [L_K^*(L_K(w))]_k = n (d_i + d_j + 2 w_k) for the pair (i, j), so the
    // inner loop only needs the weighted degrees.
    let pull = kron_laplacian_adjoint_unchecked(&target, v, n);
    let shrink = hp.alpha / (hp.beta * tau);
    let nf = n as f64;
    let pairs: Vec<(usize, usize)> = EdgeIndexMap::new(v).pairs().collect();
    let mut w = state.w.clone();
    let mut deg = vec![0.0; v];
    for _ in 0..hp.w_inner_iters {
        deg.iter_mut().for_each(|d| *d = 0.0);
        for (&(i, j), &x) in pairs.iter().zip(w.iter()) {
            deg[i] += x;
            deg[j] += x;
        }
        for (k, &(i, j)) in pairs.iter().enumerate() {
            let grad = nf * (deg[i] + deg[j] + 2.0 * w[k]) - pull[k];
            w[k] = (w[k] - grad / tau - shrink).max(0.0);
        }
    }
    w
}

/// The beta-scaled weight subproblem
/// `(1/beta) Tr(O S O^T L_K(w)) + (alpha/beta) ||w||_1 + 1/2 ||L_K(w) - O P O^T||^2`.
pub fn weight_subproblem(state: &SolverState, w: &DVector<f64>, hp: &Hyperparams) -> f64 {
    let k = kron_laplacian_unchecked(w, state.v, state.n);
    let sc = state.bases.conjugate(&state.s);
    let pc = state.bases.conjugate(&state.spectral_model());
    crate::linalg::frobenius_inner(&sc, &k) / hp.beta + hp.alpha / hp.beta * w.sum() + 0.5 * (k - pc).norm_squared()
}
