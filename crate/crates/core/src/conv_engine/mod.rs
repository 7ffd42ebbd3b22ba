//! Selection convolution on surface graphs.
//!
//! A layer computes `X' = sum_m S_m X W_m + b`, where `S_m` is the row-normalized
//! adjacency of direction bin `m` and `W_m` is the image-kernel tap that bin stands
//! for. Networks are described by a [`NetworkManifest`] and loaded from a
//! [`WeightStore`] container, so architectures are imported rather than hardcoded.

mod conv;
mod features;
mod manifest;
mod network;
mod sparse;
mod weights;

pub use conv::{selection_conv, ConvWeights};
pub use features::FeatureMap;
pub use manifest::{bias_name, weight_name, LayerKind, LayerSpec, NetworkManifest};
pub use network::{run_network, FeatureTransform, IdentityTransform, Network};
pub use sparse::{build_dir_matrices, BinMatrix, SparseDirMatrix};
pub use weights::{Tensor, WeightStore, FORMAT_TAG, FORMAT_VERSION, TAP_TO_BIN};
