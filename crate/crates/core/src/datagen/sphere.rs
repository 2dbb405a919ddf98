//! Spherical connection graphs: Fibonacci lattice, k-NN graph, local tangent
//! frames, frame-alignment edge maps, then synchronization to a consistent
//! graph.

use nalgebra::{DMatrix, Vector3};
use serde::{Deserialize, Serialize};

use crate::consistency::check_consistency;
use crate::error::{Error, Result};
use crate::graph::{build_connection_laplacian, ConnectionGraph, Edge};
use crate::linalg::{nearest_special_orthogonal, sym_eigen};
use crate::sync::synchronize;

use super::{GroundTruth, Provenance};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphereParams {
    pub count: usize,
    pub k: usize,
    /// Gaussian kernel width on squared chord length; unit weights when absent.
    #[serde(default)]
    pub kernel_width: Option<f64>,
    /// Relative eigenvalue threshold handed to synchronization. The raw
    /// frame-alignment Laplacian of a curved surface has no exact kernel, so
    /// this is loose.
    #[serde(default = "default_sync_tol")]
    pub sync_tol: f64,
}

fn default_sync_tol() -> f64 {
    0.25
}

impl SphereParams {
    pub fn new(count: usize, k: usize) -> Self {
        Self { count, k, kernel_width: None, sync_tol: default_sync_tol() }
    }
}

/// Golden-angle lattice: `z_i = 1 - (2i + 1) / count`, azimuth `i * pi (3 - sqrt 5)`.
pub fn fibonacci_sphere(count: usize) -> Vec<Vector3<f64>> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..count)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / count as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let (s, c) = (golden * i as f64).sin_cos();
            Vector3::new(r * c, r * s, z)
        })
        .collect()
}

/// Symmetrised k-nearest-neighbour graph: `(i, j)` with `i > j` is an edge
/// when either endpoint lists the other among its `k` nearest points. Ties
/// are broken by index. Output is sorted.
pub fn knn_graph(points: &[Vector3<f64>], k: usize) -> Result<Vec<(usize, usize)>> {
    let count = points.len();
    if k == 0 || k >= count {
        return Err(Error::arg(format!("k = {k} must satisfy 0 < k < {count}")));
    }
    let mut edges = std::collections::BTreeSet::new();
    for (a, pa) in points.iter().enumerate() {
        let mut others: Vec<(f64, usize)> =
            (0..count).filter(|b| *b != a).map(|b| ((points[b] - pa).norm_squared(), b)).collect();
        others.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
        for &(_, b) in others.iter().take(k) {
            edges.insert(if a > b { (a, b) } else { (b, a) });
        }
    }
    Ok(edges.into_iter().collect())
}

/// Local-PCA tangent frame at every node: the top two principal directions of
/// the neighbour offsets after removing the radial component, oriented so
/// that `f1 x f2` points outward. Each frame is a `3 x 2` matrix.
pub fn tangent_frames(points: &[Vector3<f64>], edges: &[(usize, usize)]) -> Result<Vec<DMatrix<f64>>> {
    let mut nbrs = vec![Vec::new(); points.len()];
    for &(i, j) in edges {
        nbrs[i].push(j);
        nbrs[j].push(i);
    }
    points
        .iter()
        .enumerate()
        .map(|(idx, p)| {
            let normal = p.normalize();
            let mut cov = DMatrix::<f64>::zeros(3, 3);
            for &q in &nbrs[idx] {
                let d = points[q] - p;
                let t = d - normal * d.dot(&normal);
                let t = DMatrix::from_column_slice(3, 1, t.as_slice());
                cov += &t * t.transpose();
            }
            let eig = sym_eigen(&cov);
            if nbrs[idx].len() < 2 || eig.values[1] <= 1e-12 * eig.values[2].max(f64::MIN_POSITIVE) {
                return Err(Error::Degenerate(format!("neighbourhood of node {idx} has tangent rank < 2")));
            }
            let f1: Vector3<f64> = Vector3::from_iterator(eig.vectors.column(2).iter().copied());
            let mut f2: Vector3<f64> = Vector3::from_iterator(eig.vectors.column(1).iter().copied());
            // drop the tiny radial leakage from the eigensolver
            let f1 = (f1 - normal * f1.dot(&normal)).normalize();
            f2 = f2 - normal * f2.dot(&normal) - f1 * f2.dot(&f1);
            f2 = f2.normalize();
            if f1.cross(&f2).dot(&normal) < 0.0 {
                f2 = -f2;
            }
            let mut frame = DMatrix::zeros(3, 2);
            frame.set_column(0, &f1);
            frame.set_column(1, &f2);
            Ok(frame)
        })
        .collect()
}

/// Edge maps `proj_SO(2)(F_i^T F_j)` for each `(i, j)`.
pub fn vdm_edge_maps(frames: &[DMatrix<f64>], edges: &[(usize, usize)]) -> Result<Vec<DMatrix<f64>>> {
    edges
        .iter()
        .map(|&(i, j)| {
            let cross = frames[i].tr_mul(&frames[j]);
            let smallest = cross.singular_values().min();
            if smallest < 1e-10 {
                return Err(Error::Degenerate(format!("frames at nodes {i} and {j} are orthogonal")));
            }
            nearest_special_orthogonal(&cross)
        })
        .collect()
}

pub fn spherical_cg(count: usize, k: usize, seed: u64) -> Result<GroundTruth> {
    spherical_cg_with(&SphereParams::new(count, k), seed)
}

/// Full pipeline; deterministic, so `seed` is recorded but not consumed.
pub fn spherical_cg_with(params: &SphereParams, seed: u64) -> Result<GroundTruth> {
    if params.count < 8 {
        return Err(Error::arg(format!("need at least 8 lattice points, got {}", params.count)));
    }
    let points = fibonacci_sphere(params.count);
    let pairs = knn_graph(&points, params.k)?;
    let frames = tangent_frames(&points, &pairs)?;
    let maps = vdm_edge_maps(&frames, &pairs)?;

    let weight = |i: usize, j: usize| match params.kernel_width {
        Some(eps) => (-(points[i] - points[j]).norm_squared() / eps).exp(),
        None => 1.0,
    };
    let raw_edges = pairs.iter().zip(maps).map(|(&(i, j), m)| Edge::new(i, j, weight(i, j), m)).collect();
    let raw = ConnectionGraph::new(params.count, 2, raw_edges)?;
    if !raw.is_connected() {
        return Err(Error::Disconnected { components: raw.components() });
    }
    let bases = synchronize(&build_connection_laplacian(&raw), params.sync_tol)?;

    let weighted: Vec<(usize, usize, f64)> = pairs.iter().map(|&(i, j)| (i, j, weight(i, j))).collect();
    let cg = ConnectionGraph::from_bases(&weighted, &bases)?;
    let report = check_consistency(&cg, 1e-8)?;
    if !report.consistent {
        return Err(Error::Degenerate(format!("synchronized sphere graph is inconsistent: {report:?}")));
    }
    let laplacian = build_connection_laplacian(&cg);
    Ok(GroundTruth { cg, laplacian, bases, provenance: Provenance::Sphere(*params), seed })
}
