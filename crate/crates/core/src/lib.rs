//! Learning consistent connection graphs from vector-valued node signals.
//!
//! A connection graph attaches a copy of `R^n` to every node and an
//! orthogonal map to every weighted edge. When the maps compose to the
//! identity around every cycle the graph is *consistent*, and its connection
//! Laplacian factorises as `O^T (L ⊗ I_n) O` with per-node bases `O_v`.
//!
//! The crate provides
//!
//! - the data model and the Kronecker-structured Laplacian operator pair
//!   ([`graph`], [`operator`], [`index`]), consistency checks and spectral
//!   synchronization ([`consistency`], [`sync`]);
//! - the block-coordinate learner over weights, node bases, eigenvectors and
//!   spectrum, plus the fixed-basis Kronecker baseline ([`solver`]);
//! - ground-truth generators for random and spherical connection graphs and a
//!   Gaussian signal sampler ([`datagen`]);
//! - evaluation metrics ([`metrics`]) and plain-text persistence ([`io`]).

pub mod consistency;
pub mod datagen;
pub mod error;
pub mod graph;
pub mod index;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod operator;
pub mod solver;
pub mod sync;

pub use consistency::{check_consistency, ConsistencyReport};
pub use error::{Error, Result};
pub use graph::{assemble_from_bases, build_connection_laplacian, ConnectionGraph, ConnectionLaplacian, Edge, NodeBases};
pub use index::{edge_index, EdgeIndexMap};
pub use operator::{kron_laplacian, kron_laplacian_adjoint};
pub use sync::{bases_from_kernel, synchronize};
