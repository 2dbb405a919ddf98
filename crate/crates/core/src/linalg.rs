//! Dense linear-algebra helpers shared by the graph, solver and generator code.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Symmetric eigendecomposition with eigenvalues sorted ascending and the
/// eigenvector columns permuted to match.
#[derive(Debug, Clone)]
pub struct SortedEigen {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

impl SortedEigen {
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }
}

pub fn sym_eigen(a: &DMatrix<f64>) -> SortedEigen {
    let dim = a.nrows();
    let sym = (a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]));
    let values = DVector::from_iterator(dim, order.iter().map(|&k| eig.eigenvalues[k]));
    let mut vectors = DMatrix::zeros(dim, dim);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    SortedEigen { values, vectors }
}

/// Ascending eigenvalues of a symmetric matrix.
pub fn sym_eigenvalues(a: &DMatrix<f64>) -> DVector<f64> {
    let sym = (a + a.transpose()) * 0.5;
    let mut vals: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    vals.sort_by(f64::total_cmp);
    DVector::from_vec(vals)
}

/// Scale-aware threshold used for kernel detection: `rel * max(|lambda|_max, 1)`.
pub fn kernel_threshold(values: &DVector<f64>, rel: f64) -> f64 {
    let top = values.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    rel * top.max(1.0)
}

/// Log of the generalized determinant: sum of `ln(lambda)` over eigenvalues
/// above `zero_tol` (absolute).
pub fn log_gdet(eigenvalues: &[f64], zero_tol: f64) -> Result<f64> {
    if let Some(x) = eigenvalues.iter().find(|x| **x < -zero_tol) {
        return Err(Error::Domain(format!("eigenvalue {x:e} is negative beyond tolerance")));
    }
    let mut any = false;
    let mut acc = 0.0;
    for &x in eigenvalues.iter().filter(|x| **x > zero_tol) {
        any = true;
        acc += x.ln();
    }
    if !any {
        return Err(Error::Domain("no eigenvalue above the zero tolerance".into()));
    }
    Ok(acc)
}

pub fn frobenius_inner(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// Trace of `a * b` without forming the product.
pub fn trace_of_product(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    debug_assert_eq!(a.ncols(), b.nrows());
    let mut acc = 0.0;
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

pub fn skew(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a - a.transpose()) * 0.5
}

pub fn orthogonality_defect(q: &DMatrix<f64>) -> f64 {
    let n = q.ncols();
    (q.transpose() * q - DMatrix::<f64>::identity(n, n)).norm()
}

/// Nearest special-orthogonal matrix in Frobenius norm.
///
/// Uses the SVD `A = U S V^T`; when `det(U V^T) < 0` the singular direction
/// with the smallest singular value is flipped.
pub fn nearest_special_orthogonal(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if a.nrows() != a.ncols() {
        return Err(Error::dims("square matrix", format!("{}x{}", a.nrows(), a.ncols())));
    }
    let n = a.nrows();
    if n == 1 {
        return Ok(DMatrix::from_element(1, 1, 1.0));
    }
    let svd = a.clone().svd(true, true);
    let u = svd.u.ok_or_else(|| Error::Degenerate("svd failed".into()))?;
    let vt = svd.v_t.ok_or_else(|| Error::Degenerate("svd failed".into()))?;
    let mut u = u;
    if (&u * &vt).determinant() < 0.0 {
        let smallest = (0..n)
            .min_by(|&x, &y| svd.singular_values[x].total_cmp(&svd.singular_values[y]))
            .unwrap();
        let mut col = u.column_mut(smallest);
        col.neg_mut();
    }
    Ok(u * vt)
}

/// QR-based retraction: the Q factor of `a`, with column signs chosen so
/// that R has a positive diagonal.
pub fn qr_retraction(a: &DMatrix<f64>) -> DMatrix<f64> {
    let qr = a.clone().qr();
    let mut q = qr.q();
    let r = qr.r();
    for c in 0..q.ncols() {
        if r[(c, c)] < 0.0 {
            let mut col = q.column_mut(c);
            col.neg_mut();
        }
    }
    q
}

/// Haar-distributed element of SO(n).
///
/// For `n = 2` this draws the rotation angle uniformly in `[0, 2pi)`; for
/// larger `n` it orthogonalises a standard Gaussian matrix with the usual
/// sign fix and then corrects the determinant.
pub fn random_special_orthogonal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<f64> {
    match n {
        0 => DMatrix::zeros(0, 0),
        1 => DMatrix::from_element(1, 1, 1.0),
        2 => rotation2(rng.random_range(0.0..std::f64::consts::TAU)),
        _ => {
            let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
            let mut q = qr_retraction(&g);
            if q.determinant() < 0.0 {
                let mut col = q.column_mut(n - 1);
                col.neg_mut();
            }
            q
        }
    }
}

pub fn rotation2(theta: f64) -> DMatrix<f64> {
    let (s, c) = theta.sin_cos();
    DMatrix::from_row_slice(2, 2, &[c, -s, s, c])
}
