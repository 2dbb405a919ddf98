use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{build_connection_laplacian, components_from_adjacency, ConnectionGraph, NodeBases};
use crate::index::EdgeIndexMap;
use crate::linalg::random_special_orthogonal;

use super::rng::{stream_rng, Stream};
use super::{GroundTruth, Provenance};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErParams {
    pub v: usize,
    pub n: usize,
    pub p: f64,
    pub w_lo: f64,
    pub w_hi: f64,
}

impl ErParams {
    /// `p = scale * ln(v) / v`; the reference setting uses `scale = 1.1`.
    pub fn with_log_scale(v: usize, n: usize, scale: f64) -> Self {
        let p = (scale * (v as f64).ln() / v as f64).min(1.0);
        Self { v, n, p, w_lo: 0.2, w_hi: 3.0 }
    }
}

/// Consistent connection graph on an Erdős–Rényi graph.
///
/// Draw order on the graph stream: edge coins in canonical order, repair
/// edges (one random inter-component edge at a time), weights in canonical
/// order, then node bases.
pub fn sample_er_cg(v: usize, n: usize, p: f64, w_lo: f64, w_hi: f64, seed: u64) -> Result<GroundTruth> {
    sample_er_cg_stream(&ErParams { v, n, p, w_lo, w_hi }, seed, Stream::Graph { trial: 0 })
}

pub fn sample_er_cg_stream(params: &ErParams, seed: u64, stream: Stream) -> Result<GroundTruth> {
    let ErParams { v, n, p, w_lo, w_hi } = *params;
    if v < 2 {
        return Err(Error::arg(format!("need at least 2 nodes, got {v}")));
    }
    if n == 0 {
        return Err(Error::arg("stalk dimension must be positive"));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::arg(format!("edge probability must lie in (0, 1], got {p}")));
    }
    if !(w_lo > 0.0 && w_lo < w_hi) {
        return Err(Error::arg(format!("need 0 < w_lo < w_hi, got [{w_lo}, {w_hi}]")));
    }
    let mut rng = stream_rng(seed, stream);
    let map = EdgeIndexMap::new(v);
    let mut present: Vec<bool> = map.pairs().map(|_| rng.random_bool(p)).collect();

    loop {
        let comps = components(&map, &present);
        if comps.len() == 1 {
            break;
        }
        let a = rng.random_range(0..comps.len());
        let mut b = rng.random_range(0..comps.len() - 1);
        if b >= a {
            b += 1;
        }
        let x = comps[a][rng.random_range(0..comps[a].len())];
        let y = comps[b][rng.random_range(0..comps[b].len())];
        present[map.index_unordered(x, y)?] = true;
    }

    let w = DVector::from_iterator(
        map.len(),
        present.iter().map(|&on| if on { rng.random_range(w_lo..w_hi) } else { 0.0 }),
    );
    let bases = NodeBases::new(n, (0..v).map(|_| random_special_orthogonal(n, &mut rng)).collect())?;

    let pairs: Vec<(usize, usize, f64)> =
        map.pairs().enumerate().filter(|(k, _)| present[*k]).map(|(k, (i, j))| (i, j, w[k])).collect();
    let cg = ConnectionGraph::from_bases(&pairs, &bases)?;
    let laplacian = build_connection_laplacian(&cg);
    Ok(GroundTruth { cg, laplacian, bases, provenance: Provenance::Er(*params), seed })
}

fn components(map: &EdgeIndexMap, present: &[bool]) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); map.nodes()];
    for (k, (i, j)) in map.pairs().enumerate() {
        if present[k] {
            adj[i].push((j, k));
            adj[j].push((i, k));
        }
    }
    components_from_adjacency(&adj)
}
