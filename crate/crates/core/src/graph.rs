//! Connection graphs, their Laplacians, and per-node orthogonal bases.

use std::collections::{BTreeSet, VecDeque};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::index::EdgeIndexMap;
use crate::linalg::{self, orthogonality_defect};
use crate::operator::kron_laplacian;

/// Orthogonality tolerance for edge maps and node bases.
pub const ORTHO_TOL: f64 = 1e-10;

/// One undirected edge `(i, j)`, `i > j`, with weight and orthogonal map.
///
/// The map fills the `(i, j)` block of the connection Laplacian as
/// `-weight * map`; the `(j, i)` block holds its transpose.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub weight: f64,
    pub map: DMatrix<f64>,
}

impl Edge {
    /// Builds an edge from either orientation. When `a < b` the pair is
    /// swapped and the map transposed so the stored block stays the same.
    pub fn new(a: usize, b: usize, weight: f64, map: DMatrix<f64>) -> Self {
        if a > b {
            Edge { i: a, j: b, weight, map }
        } else {
            Edge { i: b, j: a, weight, map: map.transpose() }
        }
    }

    /// Map seen when travelling from `from` across this edge.
    pub fn map_from(&self, from: usize) -> DMatrix<f64> {
        if from == self.i {
            self.map.clone()
        } else {
            self.map.transpose()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionGraph {
    v: usize,
    n: usize,
    edges: Vec<Edge>,
}

impl ConnectionGraph {
    pub fn new(v: usize, n: usize, edges: Vec<Edge>) -> Result<Self> {
        if v == 0 || n == 0 {
            return Err(Error::arg("node count and stalk dimension must be positive"));
        }
        let mut seen = BTreeSet::new();
        for e in &edges {
            if e.i >= v || e.j >= e.i {
                return Err(Error::arg(format!("edge ({}, {}) invalid for v = {v}", e.i, e.j)));
            }
            if !seen.insert((e.i, e.j)) {
                return Err(Error::arg(format!("duplicate edge ({}, {})", e.i, e.j)));
            }
            if !(e.weight >= 0.0) || !e.weight.is_finite() {
                return Err(Error::arg(format!("edge ({}, {}) has weight {}", e.i, e.j, e.weight)));
            }
            if e.map.nrows() != n || e.map.ncols() != n {
                return Err(Error::dims(
                    format!("{n}x{n} edge map"),
                    format!("{}x{}", e.map.nrows(), e.map.ncols()),
                ));
            }
            let defect = orthogonality_defect(&e.map);
            if defect >= ORTHO_TOL {
                return Err(Error::arg(format!(
                    "edge ({}, {}) map is not orthogonal (defect {defect:e})",
                    e.i, e.j
                )));
            }
        }
        Ok(Self { v, n, edges })
    }

    /// Consistent graph with edge maps `O_i^T O_j` induced by node bases.
    pub fn from_bases(pairs: &[(usize, usize, f64)], bases: &NodeBases) -> Result<Self> {
        let edges = pairs
            .iter()
            .map(|&(a, b, w)| {
                let (i, j) = if a > b { (a, b) } else { (b, a) };
                if i >= bases.len() {
                    return Err(Error::arg(format!("node {i} out of range")));
                }
                Ok(Edge { i, j, weight: w, map: bases.edge_map(i, j) })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(bases.len(), bases.dim(), edges)
    }

    pub fn nodes(&self) -> usize {
        self.v
    }

    pub fn stalk_dim(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Weights laid out in canonical edge order; absent pairs are zero.
    pub fn weight_vector(&self) -> DVector<f64> {
        let map = EdgeIndexMap::new(self.v);
        let mut w = DVector::zeros(map.len());
        for e in &self.edges {
            w[map.index_unchecked(e.i, e.j)] = e.weight;
        }
        w
    }

    /// Neighbour lists over edges with positive weight: `(neighbour, edge index into edges())`.
    pub fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.v];
        for (idx, e) in self.edges.iter().enumerate() {
            if e.weight > 0.0 {
                adj[e.i].push((e.j, idx));
                adj[e.j].push((e.i, idx));
            }
        }
        adj
    }

    /// Connected components over positive-weight edges, each sorted.
    pub fn components(&self) -> Vec<Vec<usize>> {
        components_from_adjacency(&self.adjacency())
    }

    pub fn is_connected(&self) -> bool {
        self.components().len() == 1
    }
}

pub(crate) fn components_from_adjacency(adj: &[Vec<(usize, usize)>]) -> Vec<Vec<usize>> {
    let mut label = vec![usize::MAX; adj.len()];
    let mut out = Vec::new();
    for start in 0..adj.len() {
        if label[start] != usize::MAX {
            continue;
        }
        let mut comp = vec![start];
        label[start] = out.len();
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for &(nb, _) in &adj[u] {
                if label[nb] == usize::MAX {
                    label[nb] = out.len();
                    comp.push(nb);
                    queue.push_back(nb);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// Block-diagonal collection of per-node bases in SO(n).
#[derive(Debug, Clone, PartialEq)]
pub struct NodeBases {
    n: usize,
    blocks: Vec<DMatrix<f64>>,
}

impl NodeBases {
    pub fn new(n: usize, blocks: Vec<DMatrix<f64>>) -> Result<Self> {
        Self::with_tolerance(n, blocks, ORTHO_TOL)
    }

    pub fn with_tolerance(n: usize, blocks: Vec<DMatrix<f64>>, tol: f64) -> Result<Self> {
        for (idx, b) in blocks.iter().enumerate() {
            if b.nrows() != n || b.ncols() != n {
                return Err(Error::dims(format!("{n}x{n} basis"), format!("{}x{}", b.nrows(), b.ncols())));
            }
            let defect = orthogonality_defect(b);
            if defect >= tol {
                return Err(Error::arg(format!("basis {idx} not orthogonal (defect {defect:e})")));
            }
            if b.determinant() <= 0.0 {
                return Err(Error::arg(format!("basis {idx} has negative determinant")));
            }
        }
        Ok(Self { n, blocks })
    }

    pub(crate) fn from_blocks_unchecked(n: usize, blocks: Vec<DMatrix<f64>>) -> Self {
        Self { n, blocks }
    }

    pub fn identity(v: usize, n: usize) -> Self {
        Self { n, blocks: vec![DMatrix::identity(n, n); v] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn blocks(&self) -> &[DMatrix<f64>] {
        &self.blocks
    }

    pub fn block(&self, i: usize) -> &DMatrix<f64> {
        &self.blocks[i]
    }

    /// Largest orthogonality defect and smallest determinant over all blocks.
    pub fn max_defect(&self) -> (f64, f64) {
        self.blocks.iter().fold((0.0_f64, f64::INFINITY), |(d, det), b| {
            (d.max(orthogonality_defect(b)), det.min(b.determinant()))
        })
    }

    /// Edge map `O_i^T O_j` induced by the bases.
    pub fn edge_map(&self, i: usize, j: usize) -> DMatrix<f64> {
        self.blocks[i].transpose() * &self.blocks[j]
    }

    /// Applies a common rotation on the left of every block, `O_v -> R O_v`.
    /// Edge maps `O_i^T O_j` are invariant under this gauge action.
    pub fn gauge(&self, r: &DMatrix<f64>) -> Self {
        Self { n: self.n, blocks: self.blocks.iter().map(|b| r * b).collect() }
    }

    pub fn dense(&self) -> DMatrix<f64> {
        let d = self.n * self.blocks.len();
        let mut out = DMatrix::zeros(d, d);
        for (i, b) in self.blocks.iter().enumerate() {
            out.view_mut((i * self.n, i * self.n), (self.n, self.n)).copy_from(b);
        }
        out
    }

    /// Stacks the blocks vertically into a `(v n) x n` matrix.
    pub fn stacked(&self) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.n * self.blocks.len(), self.n);
        for (i, b) in self.blocks.iter().enumerate() {
            out.view_mut((i * self.n, 0), (self.n, self.n)).copy_from(b);
        }
        out
    }

    /// `O X` with `O = blkdiag(blocks)`; `transpose` selects `O^T X`.
    pub fn left_mul(&self, x: &DMatrix<f64>, transpose: bool) -> DMatrix<f64> {
        let n = self.n;
        let mut out = DMatrix::zeros(x.nrows(), x.ncols());
        for (i, b) in self.blocks.iter().enumerate() {
            let rows = x.rows(i * n, n);
            let prod = if transpose { b.tr_mul(&rows) } else { b * rows };
            out.rows_mut(i * n, n).copy_from(&prod);
        }
        out
    }

    /// `X O^T`; `transpose` selects `X O`.
    pub fn right_mul_t(&self, x: &DMatrix<f64>, transpose: bool) -> DMatrix<f64> {
        let n = self.n;
        let mut out = DMatrix::zeros(x.nrows(), x.ncols());
        for (i, b) in self.blocks.iter().enumerate() {
            let cols = x.columns(i * n, n);
            let prod = if transpose { cols * b } else { cols * b.transpose() };
            out.columns_mut(i * n, n).copy_from(&prod);
        }
        out
    }

    /// `O X O^T`.
    pub fn conjugate(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self.right_mul_t(&self.left_mul(x, false), false)
    }

    /// `O^T X O`.
    pub fn conjugate_t(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self.right_mul_t(&self.left_mul(x, true), true)
    }
}

/// Dense connection Laplacian of size `vn x vn`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionLaplacian {
    v: usize,
    n: usize,
    matrix: DMatrix<f64>,
}

impl ConnectionLaplacian {
    /// Validates symmetry, positive semidefiniteness and the scaled-identity
    /// structure of diagonal blocks.
    pub fn from_matrix(matrix: DMatrix<f64>, v: usize, n: usize) -> Result<Self> {
        let d = v * n;
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::dims(format!("{d}x{d}"), format!("{}x{}", matrix.nrows(), matrix.ncols())));
        }
        let scale = matrix.norm().max(1.0);
        let asym = (&matrix - matrix.transpose()).amax();
        if asym > 1e-10 * scale {
            return Err(Error::arg(format!("matrix is not symmetric (max deviation {asym:e})")));
        }
        for i in 0..v {
            let block = matrix.view((i * n, i * n), (n, n));
            let deg = block[(0, 0)];
            if deg < -1e-10 * scale {
                return Err(Error::arg(format!("diagonal block {i} is negative")));
            }
            let dev = (block - DMatrix::<f64>::identity(n, n) * deg).amax();
            if dev > 1e-10 * scale {
                return Err(Error::arg(format!("diagonal block {i} is not a multiple of the identity")));
            }
        }
        let eig = linalg::sym_eigenvalues(&matrix);
        let top = eig.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        let min = eig.min();
        if min < -1e-8 * top {
            return Err(Error::NotPsd { min_eig: min });
        }
        Ok(Self { v, n, matrix })
    }

    pub(crate) fn from_matrix_unchecked(matrix: DMatrix<f64>, v: usize, n: usize) -> Self {
        Self { v, n, matrix }
    }

    pub fn nodes(&self) -> usize {
        self.v
    }

    pub fn stalk_dim(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    pub fn block(&self, i: usize, j: usize) -> DMatrix<f64> {
        self.matrix.view((i * self.n, j * self.n), (self.n, self.n)).into_owned()
    }

    pub fn eigenvalues(&self) -> DVector<f64> {
        linalg::sym_eigenvalues(&self.matrix)
    }
}

/// Assembles the connection Laplacian block by block from a graph.
pub fn build_connection_laplacian(cg: &ConnectionGraph) -> ConnectionLaplacian {
    let (v, n) = (cg.v, cg.n);
    let mut m = DMatrix::zeros(v * n, v * n);
    for e in &cg.edges {
        let off = &e.map * -e.weight;
        m.view_mut((e.i * n, e.j * n), (n, n)).copy_from(&off);
        m.view_mut((e.j * n, e.i * n), (n, n)).copy_from(&off.transpose());
        for a in 0..n {
            m[(e.i * n + a, e.i * n + a)] += e.weight;
            m[(e.j * n + a, e.j * n + a)] += e.weight;
        }
    }
    ConnectionLaplacian::from_matrix_unchecked(m, v, n)
}

/// `O^T (L(w) ⊗ I_n) O`.
pub fn assemble_from_bases(w: &DVector<f64>, bases: &NodeBases) -> Result<ConnectionLaplacian> {
    let v = bases.len();
    let n = bases.dim();
    let k = kron_laplacian(w, v, n)?;
    Ok(ConnectionLaplacian::from_matrix_unchecked(bases.conjugate_t(&k), v, n))
}
