use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::graph::ConnectionLaplacian;
use crate::linalg::{kernel_threshold, sym_eigen};

use super::rng::{stream_rng, Stream};
use super::GroundTruth;

/// `vn x M` matrix of column samples.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalMatrix {
    pub x: DMatrix<f64>,
    pub v: usize,
    pub n: usize,
    pub seed: u64,
}

impl SignalMatrix {
    pub fn samples(&self) -> usize {
        self.x.ncols()
    }

    pub fn covariance(&self) -> Result<DMatrix<f64>> {
        crate::solver::covariance(&self.x)
    }
}

/// `M = round(2 r v)`.
pub fn samples_for_ratio(r: f64, v: usize) -> usize {
    (2.0 * r * v as f64).round() as usize
}

pub fn ratio_for_samples(m: usize, v: usize) -> f64 {
    m as f64 / (2.0 * v as f64)
}

/// Draws `m` samples from `N(0, L^+)` using the ground truth's Laplacian.
pub fn sample_signals(gt: &GroundTruth, m: usize, seed: u64) -> Result<SignalMatrix> {
    sample_signals_stream(&gt.laplacian, m, seed, Stream::Custom(0))
}

/// Colours standard normals with `U_+ Gamma_+^{-1/2}` over the non-kernel
/// eigenpairs of `L`, one column per sample.
pub fn sample_signals_stream(lap: &ConnectionLaplacian, m: usize, seed: u64, stream: Stream) -> Result<SignalMatrix> {
    if m == 0 {
        return Err(Error::arg("need at least one sample"));
    }
    let eig = sym_eigen(lap.matrix());
    let thr = kernel_threshold(&eig.values, 1e-8);
    let keep: Vec<usize> = (0..eig.values.len()).filter(|&k| eig.values[k] > thr).collect();
    let mut coloring = DMatrix::zeros(eig.vectors.nrows(), keep.len());
    for (c, &k) in keep.iter().enumerate() {
        coloring.set_column(c, &(eig.vectors.column(k) / eig.values[k].sqrt()));
    }
    let mut rng = stream_rng(seed, stream);
    let mut z = DMatrix::zeros(keep.len(), m);
    for col in 0..m {
        for row in 0..keep.len() {
            z[(row, col)] = rng.sample::<f64, _>(StandardNormal);
        }
    }
    Ok(SignalMatrix { x: coloring * z, v: lap.nodes(), n: lap.stalk_dim(), seed })
}
