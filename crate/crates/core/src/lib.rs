//! Optimization-free stylization of 3D Gaussian splat scenes.
//!
//! The pipeline treats splat centers (optionally densified by sampling each
//! Gaussian) as a point cloud lying on a pseudo implicit surface, builds an
//! oriented KNN graph with per-node tangent frames, and runs an image style
//! network on that graph through selection convolution. The resulting colors are
//! interpolated back to the splats and written as degree-0 SH coefficients.
//!
//! Module map:
//! - [`splat_io`]: 3DGS PLY I/O, SH color conversion, synthetic scenes.
//! - [`preprocess`]: neighbourhood-offset noise filtering and super-sampling.
//! - [`surface_graph`]: normals, tangent frames, KNN edges, direction bins, pooling.
//! - [`conv_engine`]: selection convolution, network manifests and weight containers.
//! - [`stylizer`]: style encoding, whitening-coloring transform, color writeback.
//! - [`pipeline`]: end-to-end runs with timing and ablation modes.

pub mod conv_engine;
pub mod error;
pub mod pipeline;
pub mod preprocess;
pub mod spatial;
pub mod splat_io;
pub mod stylizer;
pub mod surface_graph;
mod util;

pub use error::{Error, ParseErrorKind, Result};
