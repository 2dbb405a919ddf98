use crate::error::{Error, Result};
use crate::linalg::frobenius_inner;

use super::hyper::Hyperparams;
use super::state::SolverState;

/// Value of the relaxed pseudo-likelihood objective
///
/// `-n sum log(lambda) + Tr(S Lc) + alpha ||w||_1 + beta/2 ||Lc - U (Lambda ⊗ I) U^T||_F^2`
///
/// with `Lc = O^T L_K(w) O`.
pub fn objective(state: &SolverState, hp: &Hyperparams) -> Result<f64> {
    objective_terms(state, hp).map(|t| t.total())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveTerms {
    pub log_det: f64,
    pub trace: f64,
    pub sparsity: f64,
    pub penalty: f64,
}

impl ObjectiveTerms {
    pub fn total(&self) -> f64 {
        self.log_det + self.trace + self.sparsity + self.penalty
    }
}

pub fn objective_terms(state: &SolverState, hp: &Hyperparams) -> Result<ObjectiveTerms> {
    if let Some(x) = state.lambda.iter().find(|x| !(**x > 0.0)) {
        return Err(Error::Domain(format!("eigenvalue estimate {x} is not positive")));
    }
    let n = state.n as f64;
    let lap = state.laplacian();
    let resid = &lap - state.spectral_model();
    Ok(ObjectiveTerms {
        log_det: -n * state.lambda.iter().map(|x| x.ln()).sum::<f64>(),
        trace: frobenius_inner(&state.s, &lap),
        sparsity: hp.alpha * state.w.sum(),
        penalty: 0.5 * hp.beta * resid.norm_squared(),
    })
}
