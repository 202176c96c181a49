//! Reversible harmonic maps between triangle meshes.
//!
//! The crate computes precise correspondences (every source vertex mapped to a
//! point on a face of the target) by alternating minimization of a smoothness
//! plus reversibility energy. Geodesic distances enter through a Euclidean
//! embedding of each mesh, which turns every sub-problem into either a sparse
//! linear solve or a closest-point projection.
//!
//! Module map:
//!
//! * [`mesh`], [`obj`], [`operators`]: mesh storage, OBJ I/O, cotangent
//!   Laplacian and lumped mass.
//! * [`geodesic`]: fast marching and edge-graph distances, geodesic Voronoi.
//! * [`embedding`]: landmark MDS embedding with stress refinement.
//! * [`map`]: barycentric points and precise maps.
//! * [`projection`]: closest point on an embedded surface (BVH accelerated).
//! * [`init`]: initial state from landmarks, pointwise maps or functional maps.
//! * [`solver`]: the split energy and block coordinate descent.
//! * [`metrics`]: conformal distortion, ground-truth, symmetry and
//!   segmentation scores.
//! * [`transfer`]: texture and connectivity transfer through a map.
//!
//! Parallel kernels use rayon when the `parallel` feature is enabled (the
//! default) and fall back to plain iterators otherwise.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod dense;
pub mod embedding;
mod error;
pub mod geodesic;
pub mod init;
pub mod io;
pub mod kdtree;
pub mod linalg;
pub mod map;
pub mod mesh;
pub mod metrics;
pub mod obj;
pub mod operators;
pub mod par;
pub mod projection;
pub mod shapes;
pub mod solver;
pub mod transfer;

pub use dense::RowMatrix;
pub use embedding::{EmbeddingOptions, MetricEmbedding};
pub use error::{Error, Result};
pub use map::{BarycentricPoint, PreciseMap};
pub use mesh::TriangleMesh;
pub use operators::MeshOperators;
pub use solver::{SolverConfig, SolverState};
