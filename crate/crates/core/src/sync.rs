//! Spectral synchronization: recover node bases from the low end of a
//! connection Laplacian's spectrum.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graph::{ConnectionLaplacian, NodeBases};
use crate::linalg::{self, nearest_special_orthogonal};

/// Recovers bases `O_v in SO(n)` such that `O_i^T O_j` reproduces the edge
/// maps of an exactly consistent Laplacian, up to a common left rotation.
///
/// The `n` eigenvectors of smallest eigenvalue are stacked into `v` blocks of
/// size `n x n`; block `i` is `O_i^T C` for one common `C`, so the transpose of
/// its nearest special-orthogonal matrix is the basis. When the blocks carry
/// negative determinant overall one eigenvector is negated first.
///
/// `tol` is relative to `max(lambda_max, 1)`: at least `n` eigenvalues must
/// fall below it.
pub fn synchronize(laplacian: &ConnectionLaplacian, tol: f64) -> Result<NodeBases> {
    let v = laplacian.nodes();
    let n = laplacian.stalk_dim();
    let eig = linalg::sym_eigen(laplacian.matrix());
    let threshold = linalg::kernel_threshold(&eig.values, tol);
    let found = eig.values.iter().filter(|x| **x <= threshold).count();
    if found < n {
        return Err(Error::SyncUndefined { needed: n, found });
    }

    bases_from_kernel(eig.vectors.columns(0, n).into_owned(), v, n)
}

/// Bases from a `vn x n` orthonormal basis of a (near-)kernel whose blocks
/// are `O_i^T C` for one common `C`.
pub fn bases_from_kernel(mut kernel: DMatrix<f64>, v: usize, n: usize) -> Result<NodeBases> {
    if kernel.shape() != (v * n, n) {
        return Err(Error::dims(format!("{}x{n} kernel basis", v * n), format!("{}x{}", kernel.nrows(), kernel.ncols())));
    }
    let det_sum: f64 = (0..v).map(|i| kernel.rows(i * n, n).determinant()).sum();
    if det_sum < 0.0 {
        let mut col = kernel.column_mut(n - 1);
        col.neg_mut();
    }

    let blocks = (0..v)
        .map(|i| {
            let block: DMatrix<f64> = kernel.rows(i * n, n).into_owned();
            if block.norm() < 1e-12 {
                return Err(Error::Degenerate(format!("kernel block at node {i} vanishes")));
            }
            Ok(nearest_special_orthogonal(&block)?.transpose())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(NodeBases::from_blocks_unchecked(n, blocks))
}
