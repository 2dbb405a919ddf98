//! Consistency verification: cycle holonomy over a fundamental cycle basis
//! and the spectral signature (connection spectrum = graph spectrum, each
//! eigenvalue repeated `n` times).

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::graph::{build_connection_laplacian, ConnectionGraph};
use crate::linalg;
use crate::operator::combinatorial_laplacian;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConsistencyReport {
    pub consistent: bool,
    /// Largest `||O_ij - G_i^T G_j||_F` over non-tree edges, where `G` are the
    /// bases obtained by transporting along a BFS spanning tree.
    pub max_cycle_defect: f64,
    /// Largest deviation between grouped connection eigenvalues and the
    /// combinatorial eigenvalues.
    pub spectral_defect: f64,
}

pub fn check_consistency(cg: &ConnectionGraph, tol: f64) -> Result<ConsistencyReport> {
    let components = cg.components();
    if components.len() > 1 {
        return Err(Error::Disconnected { components });
    }
    let max_cycle_defect = cycle_defect(cg);
    let spectral_defect = spectral_defect(cg)?;
    Ok(ConsistencyReport {
        consistent: max_cycle_defect < tol && spectral_defect < tol,
        max_cycle_defect,
        spectral_defect,
    })
}

fn cycle_defect(cg: &ConnectionGraph) -> f64 {
    let v = cg.nodes();
    let n = cg.stalk_dim();
    let adj = cg.adjacency();
    let edges = cg.edges();

    let mut frame: Vec<Option<DMatrix<f64>>> = vec![None; v];
    let mut tree_edge = vec![false; edges.len()];
    frame[0] = Some(DMatrix::identity(n, n));
    let mut queue = VecDeque::from([0usize]);
    while let Some(u) = queue.pop_front() {
        let gu = frame[u].clone().unwrap();
        for &(nb, idx) in &adj[u] {
            if frame[nb].is_none() {
                frame[nb] = Some(&gu * edges[idx].map_from(u));
                tree_edge[idx] = true;
                queue.push_back(nb);
            }
        }
    }

    edges
        .iter()
        .enumerate()
        .filter(|(idx, e)| !tree_edge[*idx] && e.weight > 0.0)
        .map(|(_, e)| {
            let gi = frame[e.i].as_ref().unwrap();
            let gj = frame[e.j].as_ref().unwrap();
            (gi.tr_mul(gj) - &e.map).norm()
        })
        .fold(0.0, f64::max)
}

fn spectral_defect(cg: &ConnectionGraph) -> Result<f64> {
    let n = cg.stalk_dim();
    let gamma = build_connection_laplacian(cg).eigenvalues();
    let lam = linalg::sym_eigenvalues(&combinatorial_laplacian(&cg.weight_vector(), cg.nodes())?);
    Ok(grouped_deviation(&gamma, &lam, n))
}

/// `max_k |gamma_k - lambda_{k / n}|` for ascending spectra.
pub fn grouped_deviation(gamma: &DVector<f64>, lambda: &DVector<f64>, n: usize) -> f64 {
    gamma
        .iter()
        .enumerate()
        .map(|(k, g)| (g - lambda[k / n]).abs())
        .fold(0.0, f64::max)
}
