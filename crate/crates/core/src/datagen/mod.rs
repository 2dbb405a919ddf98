//! Ground-truth connection graphs and Gaussian signals drawn from them.

mod er;
mod rng;
mod signals;
mod sphere;

use serde::{Deserialize, Serialize};

use crate::graph::{ConnectionGraph, ConnectionLaplacian, NodeBases};

pub use er::{sample_er_cg, sample_er_cg_stream, ErParams};
pub use rng::{stream_rng, Stream};
pub use signals::{ratio_for_samples, sample_signals, sample_signals_stream, samples_for_ratio, SignalMatrix};
pub use sphere::{fibonacci_sphere, knn_graph, spherical_cg, spherical_cg_with, tangent_frames, vdm_edge_maps, SphereParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Provenance {
    Er(ErParams),
    Sphere(SphereParams),
}

impl Provenance {
    pub fn family(&self) -> &'static str {
        match self {
            Provenance::Er(_) => "er",
            Provenance::Sphere(_) => "sphere",
        }
    }
}

/// A consistent connection graph together with its Laplacian and the node
/// bases that generate its edge maps.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub cg: ConnectionGraph,
    pub laplacian: ConnectionLaplacian,
    pub bases: NodeBases,
    pub provenance: Provenance,
    pub seed: u64,
}

impl GroundTruth {
    pub fn nodes(&self) -> usize {
        self.cg.nodes()
    }

    pub fn stalk_dim(&self) -> usize {
        self.cg.stalk_dim()
    }
}
