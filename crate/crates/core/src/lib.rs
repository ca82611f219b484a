//! Shape retrieval toolkit for triangle meshes.
//!
//! The crate implements the building blocks of a bag-of-visual-words
//! retrieval pipeline over 3D triangle meshes:
//!
//! - [`mesh`] / [`off`]: indexed triangle meshes, adjacency queries and
//!   ASCII OFF I/O
//! - [`geometry`]: per-vertex normals and principal curvatures
//! - [`decimate`]: shortest-edge-collapse simplification
//! - [`rings`]: concentric surface rings around a vertex, arc-length
//!   resampling and percentile ("histogram") sampling
//! - [`descriptor`] / [`reduction`]: six local surface descriptors plus
//!   dataset-wide PCA reduction and [0,1] normalization
//! - [`keypoints`]: uniform random sampling and three salient point
//!   detectors (mesh saliency, multi-scale salient points, 3D Harris)
//! - [`bow`]: k-means dictionaries, word histograms, descriptor
//!   combination and the pairwise dissimilarity matrix
//! - [`eval`]: retrieval statistics (NN, tiers, E-measure, DCG,
//!   precision/recall) and classification file parsing
//!
//! All randomized operations take explicit seeds and are deterministic
//! regardless of thread count.

pub mod bow;
pub mod decimate;
pub mod descriptor;
pub mod eval;
pub mod geometry;
pub mod keypoints;
pub mod mesh;
pub mod off;
pub mod reduction;
pub mod rings;
pub mod shapes;
pub mod spatial;

mod error;

pub use error::{Error, Result};
pub use mesh::{BBox, TriMesh};
