//! Block-coordinate learner for consistent connection graphs.
//!
//! Each outer iteration runs, in order: a majorization-minimization step on
//! the edge weights, Riemannian gradient descent on the node bases (skipped
//! for the [`Method::Kron`] baseline), the eigenvector update, and the
//! isotonic eigenvalue update. Every step is a descent step for the same
//! objective, so the objective trace is non-increasing.

mod bases;
mod crossval;
mod fit;
mod hyper;
mod objective;
mod spectral;
mod state;
mod weights;

pub use bases::{euclidean_gradient_o, o_subproblem_dense, riemannian_gradient, update_o, OStepInfo};
pub use crossval::{cross_validate, fold_assignment, validation_score, CrossValidation};
pub use fit::{covariance, fit, fit_with_observer, initial_state, spectral_bases, FitResult, IterationRecord, Method};
pub use hyper::{BasesInit, Hyperparams, OStepParams};
pub use objective::{objective, objective_terms, ObjectiveTerms};
pub use spectral::{block_traces, isotonic_eigenvalues, kkt_eigenvalue, update_lambda, update_u};
pub use state::SolverState;
pub use weights::{update_w, weight_residual, weight_subproblem};

#[cfg(test)]
mod tests;
