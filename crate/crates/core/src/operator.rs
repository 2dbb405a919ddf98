//! The Kronecker-structured Laplacian operator `w -> L(w) ⊗ I_n` and its
//! adjoint with respect to the Frobenius / Euclidean inner products.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::index::EdgeIndexMap;

/// Weighted combinatorial Laplacian `D - W` on `v` nodes.
pub fn combinatorial_laplacian(w: &DVector<f64>, v: usize) -> Result<DMatrix<f64>> {
    kron_laplacian(w, v, 1)
}

/// `L(w) ⊗ I_n`: off-diagonal block `(i, j)` is `-w_k I_n` and diagonal block
/// `i` is the weighted degree times `I_n`.
pub fn kron_laplacian(w: &DVector<f64>, v: usize, n: usize) -> Result<DMatrix<f64>> {
    let map = EdgeIndexMap::new(v);
    if w.len() != map.len() {
        return Err(Error::dims(format!("weight vector of length {}", map.len()), w.len()));
    }
    if let Some((k, x)) = w.iter().enumerate().find(|(_, x)| !(**x >= 0.0)) {
        return Err(Error::arg(format!("weight w[{k}] = {x} is negative")));
    }
    Ok(kron_laplacian_unchecked(w, v, n))
}

pub(crate) fn kron_laplacian_unchecked(w: &DVector<f64>, v: usize, n: usize) -> DMatrix<f64> {
    let map = EdgeIndexMap::new(v);
    let mut out = DMatrix::zeros(v * n, v * n);
    for (k, (i, j)) in map.pairs().enumerate() {
        let wk = w[k];
        if wk == 0.0 {
            continue;
        }
        for a in 0..n {
            out[(i * n + a, j * n + a)] -= wk;
            out[(j * n + a, i * n + a)] -= wk;
            out[(i * n + a, i * n + a)] += wk;
            out[(j * n + a, j * n + a)] += wk;
        }
    }
    out
}

/// Adjoint operator: entry `k` for the pair `(i, j)` equals
/// `Tr(Y_ii + Y_jj - Y_ij - Y_ji)` over `n x n` blocks.
pub fn kron_laplacian_adjoint(y: &DMatrix<f64>, v: usize, n: usize) -> Result<DVector<f64>> {
    if y.nrows() != v * n || y.ncols() != v * n {
        return Err(Error::dims(
            format!("{0}x{0} matrix", v * n),
            format!("{}x{}", y.nrows(), y.ncols()),
        ));
    }
    Ok(kron_laplacian_adjoint_unchecked(y, v, n))
}

pub(crate) fn kron_laplacian_adjoint_unchecked(y: &DMatrix<f64>, v: usize, n: usize) -> DVector<f64> {
    let map = EdgeIndexMap::new(v);
    let block_trace = |r: usize, c: usize| -> f64 { (0..n).map(|a| y[(r * n + a, c * n + a)]).sum() };
    let diag: Vec<f64> = (0..v).map(|i| block_trace(i, i)).collect();
    DVector::from_iterator(
        map.len(),
        map.pairs()
            .map(|(i, j)| diag[i] + diag[j] - block_trace(i, j) - block_trace(j, i)),
    )
}

/// Lipschitz constant of `L_K^* ∘ L_K` used for the weight step, `2 n v`.
pub fn lipschitz_constant(v: usize, n: usize) -> f64 {
    (2 * n * v) as f64
}
