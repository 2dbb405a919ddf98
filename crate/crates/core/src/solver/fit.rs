use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{ConnectionLaplacian, NodeBases};
use crate::index::EdgeIndexMap;
use crate::linalg::{kernel_threshold, sym_eigen, sym_eigenvalues};
use crate::sync::bases_from_kernel;

use super::bases::update_o;
use super::hyper::{BasesInit, Hyperparams};
use super::objective::objective;
use super::spectral::{update_lambda, update_u};
use super::state::SolverState;
use super::weights::update_w;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Joint learning of weights and node bases.
    Scgl,
    /// Node bases frozen to the identity.
    Kron,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Scgl => "scgl",
            Method::Kron => "kron",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "scgl" => Ok(Method::Scgl),
            "kron" => Ok(Method::Kron),
            other => Err(Error::arg(format!("unknown method '{other}' (expected scgl or kron)"))),
        }
    }
}

/// One line of the verbose trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    pub objective: f64,
    pub rel_change: f64,
    pub w_step_norm: f64,
    pub o_grad_norm: f64,
}

impl IterationRecord {
    pub const HEADER: &'static str = "iter,objective,rel_change,w_step_norm,o_grad_norm";
}

impl fmt::Display for IterationRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{:.12e},{:.6e},{:.6e},{:.6e}",
            self.iter, self.objective, self.rel_change, self.w_step_norm, self.o_grad_norm
        )
    }
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub method: Method,
    pub hyperparams: Hyperparams,
    pub state: SolverState,
    /// `O^T L_K(w) O`.
    pub laplacian: ConnectionLaplacian,
    /// `(i, j, O_i^T O_j)` for every edge with positive learned weight.
    pub edge_maps: Vec<(usize, usize, DMatrix<f64>)>,
    pub objective_trace: Vec<f64>,
    pub converged: bool,
    /// Outer iterations in which the basis line search stalled.
    pub o_stalls: usize,
    /// Kernel dimension of the learned Laplacian; larger than `n` means the
    /// learned graph fell apart.
    pub kernel_dim: usize,
}

impl FitResult {
    pub fn weights(&self) -> &DVector<f64> {
        &self.state.w
    }

    pub fn bases(&self) -> &NodeBases {
        &self.state.bases
    }

    pub fn disconnected(&self) -> bool {
        self.kernel_dim > self.state.n
    }
}

/// Empirical covariance `X X^T / (M - 1)` of column samples.
pub fn covariance(x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let m = x.ncols();
    if m < 2 {
        return Err(Error::arg(format!("need at least 2 samples for a covariance, got {m}")));
    }
    Ok(x * x.transpose() / (m as f64 - 1.0))
}

/// Bases synchronized from the `n` smallest eigenvectors of `s`. Samples of
/// `N(0, L^+)` have zero variance exactly along the kernel of `L`, whose
/// blocks carry the generating bases.
pub fn spectral_bases(s: &DMatrix<f64>, v: usize, n: usize) -> Result<NodeBases> {
    let eig = sym_eigen(s);
    bases_from_kernel(eig.vectors.columns(0, n).into_owned(), v, n)
}

/// Deterministic starting point: unit weights on the complete graph, bases
/// per `hp.bases_init` (identity for the Kronecker baseline and for `n = 1`),
/// and `U`, `lambda` from one eigendecomposition.
pub fn initial_state(s: DMatrix<f64>, v: usize, n: usize, hp: &Hyperparams, method: Method) -> SolverState {
    let w = DVector::from_element(EdgeIndexMap::new(v).len(), 1.0);
    let bases = match (method, hp.bases_init) {
        (Method::Scgl, BasesInit::Spectral) if n > 1 => spectral_bases(&s, v, n).unwrap_or_else(|e| {
            log::warn!("spectral basis initialization failed ({e}); starting from identity");
            NodeBases::identity(v, n)
        }),
        _ => NodeBases::identity(v, n),
    };
    let mut state = SolverState {
        v,
        n,
        w,
        bases,
        u: DMatrix::zeros(v * n, n * (v - 1)),
        lambda: DVector::zeros(v - 1),
        s,
        iteration: 0,
        history: Vec::new(),
    };
    let eig = sym_eigen(&state.laplacian());
    state.u = eig.vectors.columns(n, n * (v - 1)).into_owned();
    let mut prev = hp.c1;
    state.lambda = DVector::from_iterator(
        v - 1,
        (0..v - 1).map(|b| {
            let mean = eig.values.rows(n + b * n, n).mean();
            prev = mean.clamp(prev, hp.c2);
            prev
        }),
    );
    state
}

/// Runs the block-coordinate solver on covariance `s`.
pub fn fit(s: &DMatrix<f64>, v: usize, n: usize, hp: &Hyperparams, method: Method) -> Result<FitResult> {
    fit_with_observer(s, v, n, hp, method, |_| {})
}

pub fn fit_with_observer<F: FnMut(&IterationRecord)>(
    s: &DMatrix<f64>,
    v: usize,
    n: usize,
    hp: &Hyperparams,
    method: Method,
    mut observer: F,
) -> Result<FitResult> {
    hp.validate()?;
    if v < 2 || n == 0 {
        return Err(Error::arg(format!("need v >= 2 and n >= 1, got v = {v}, n = {n}")));
    }
    if s.nrows() != v * n || s.ncols() != v * n {
        return Err(Error::dims(format!("{0}x{0} covariance", v * n), format!("{}x{}", s.nrows(), s.ncols())));
    }
    let asym = (s - s.transpose()).amax();
    let scale = s.amax().max(f64::MIN_POSITIVE);
    if asym > 1e-10 * scale {
        return Err(Error::arg(format!("covariance is not symmetric (deviation {asym:e})")));
    }
    let eigs = sym_eigenvalues(s);
    let top = eigs.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if eigs.min() < -1e-6 * top {
        return Err(Error::NotPsd { min_eig: eigs.min() });
    }

    let mut state = initial_state(s.clone(), v, n, hp, method);
    let mut prev = objective(&state, hp)?;
    state.history.push(prev);
    let mut converged = false;
    let mut o_stalls = 0;

    for iter in 1..=hp.max_outer_iters {
        let w_new = update_w(&state, hp);
        let w_step_norm = (&w_new - &state.w).norm();
        state.w = w_new;

        let mut o_grad_norm = 0.0;
        if method == Method::Scgl && n > 1 {
            let (bases, info) = update_o(&state, hp);
            state.bases = bases;
            o_grad_norm = info.grad_norm;
            if info.stalled {
                o_stalls += 1;
            }
        }

        state.u = update_u(&state);
        state.lambda = update_lambda(&state, hp)?;
        state.iteration = iter;

        let obj = objective(&state, hp)?;
        state.history.push(obj);
        let rel_change = (prev - obj).abs() / prev.abs().max(f64::MIN_POSITIVE);
        observer(&IterationRecord { iter, objective: obj, rel_change, w_step_norm, o_grad_norm });
        log::debug!("iter {iter}: objective {obj:.10e} (rel change {rel_change:.3e})");
        prev = obj;
        if rel_change < hp.rel_tol {
            converged = true;
            break;
        }
    }

    let lap = state.laplacian();
    let eig = sym_eigenvalues(&lap);
    let thr = kernel_threshold(&eig, hp.zero_tol);
    let kernel_dim = eig.iter().filter(|x| **x < thr).count();
    let map = EdgeIndexMap::new(v);
    let edge_maps = map
        .pairs()
        .enumerate()
        .filter(|(k, _)| state.w[*k] > 0.0)
        .map(|(_, (i, j))| (i, j, state.bases.edge_map(i, j)))
        .collect();

    Ok(FitResult {
        method,
        hyperparams: *hp,
        objective_trace: state.history.clone(),
        laplacian: ConnectionLaplacian::from_matrix_unchecked(lap, v, n),
        edge_maps,
        state,
        converged,
        o_stalls,
        kernel_dim,
    })
}
