//! Eigenvector and eigenvalue blocks.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::sym_eigen;

use super::hyper::Hyperparams;
use super::state::SolverState;

/// Eigenvectors of the current connection Laplacian for the `n(v-1)` largest
/// eigenvalues, ascending; the `n` kernel directions are dropped.
pub fn update_u(state: &SolverState) -> DMatrix<f64> {
    let eig = sym_eigen(&state.laplacian());
    let d = state.v * state.n;
    eig.vectors.columns(state.n, d - state.n).into_owned()
}

/// Traces of the diagonal `n x n` blocks of `M = U^T Lc U`.
pub fn block_traces(state: &SolverState) -> Vec<f64> {
    let lu = state.laplacian() * &state.u;
    let n = state.n;
    (0..state.v - 1)
        .map(|b| (b * n..(b + 1) * n).map(|c| state.u.column(c).dot(&lu.column(c))).sum())
        .collect()
}

/// Minimizer of `-n log(x) - beta t x + beta n x^2 / 2`:
/// `(t + sqrt(t^2 + 4 n^2 / beta)) / (2 n)`.
pub fn kkt_eigenvalue(trace: f64, n: usize, beta: f64) -> f64 {
    let n = n as f64;
    (trace + (trace * trace + 4.0 * n * n / beta).sqrt()) / (2.0 * n)
}

pub fn update_lambda(state: &SolverState, hp: &Hyperparams) -> Result<DVector<f64>> {
    let traces = block_traces(state);
    isotonic_eigenvalues(&traces, state.n, hp.beta, hp.c1, hp.c2).map(DVector::from_vec)
}

/// Solves
/// `min sum_i [-n log x_i - beta t_i x_i + beta n x_i^2 / 2]`
/// subject to `c1 <= x_1 <= ... <= x_m <= c2`.
///
/// Each term is convex with minimizer increasing in `t_i`, and a pooled run of
/// terms is minimized at the KKT value of the mean trace. Pool-adjacent-
/// violators on the traces followed by clipping to `[c1, c2]` is therefore
/// exact.
pub fn isotonic_eigenvalues(traces: &[f64], n: usize, beta: f64, c1: f64, c2: f64) -> Result<Vec<f64>> {
    if !(c1 <= c2) {
        return Err(Error::Config(format!("c1 = {c1} exceeds c2 = {c2}")));
    }
    // (sum of traces, count)
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(traces.len());
    for &t in traces {
        blocks.push((t, 1));
        while blocks.len() > 1 {
            let (s1, c1n) = blocks[blocks.len() - 1];
            let (s0, c0n) = blocks[blocks.len() - 2];
            if s0 / c0n as f64 > s1 / c1n as f64 {
                blocks.pop();
                let last = blocks.last_mut().unwrap();
                *last = (s0 + s1, c0n + c1n);
            } else {
                break;
            }
        }
    }
    let mut out = Vec::with_capacity(traces.len());
    for (sum, count) in blocks {
        let x = kkt_eigenvalue(sum / count as f64, n, beta).clamp(c1, c2);
        out.extend(std::iter::repeat_n(x, count));
    }
    Ok(out)
}
