//! Style transfer onto graph node colors and back onto splats.
//!
//! The style image is encoded on its pixel grid, the scene colors on the surface
//! graph, and the manifest's transform slot aligns their feature statistics with a
//! whitening-coloring transform before the decoder runs on the surface graph.

mod image;
mod transform;
mod writeback;

pub use self::image::StyleImage;
pub use transform::{linear_transform, TransformSpec};
pub use writeback::{idw_color, writeback, WritebackOptions};

use crate::conv_engine::{FeatureMap, Network};
use crate::error::{Error, Result};
use crate::surface_graph::{grid_graph, SurfaceGraph};

/// Smallest style image side accepted by [`encode_style`].
pub const MIN_STYLE_SIDE: usize = 32;

/// Encoder features of `image` on its pixel grid.
pub fn encode_style(image: &StyleImage, network: &Network) -> Result<FeatureMap> {
    let factor = network.manifest().encoder_pool_factor();
    let (h, w) = (image.height(), image.width());
    if h < MIN_STYLE_SIDE || w < MIN_STYLE_SIDE || h % factor != 0 || w % factor != 0 {
        return Err(Error::Manifest(format!(
            "style image {h}x{w} must be at least {MIN_STYLE_SIDE} per side and divisible by {factor}"
        )));
    }
    let grid = grid_graph(h, w)?;
    network.encode(&grid, &FeatureMap::from_rgb(image.pixels()))
}

/// Runs the network on `graph` with style features injected at the transform slot.
/// Returns per-node colors clamped to `[0, 1]`.
pub fn stylize_graph(
    graph: &SurfaceGraph,
    colors: &[[f64; 3]],
    style: &StyleImage,
    network: &Network,
    spec: &TransformSpec,
) -> Result<Vec<[f64; 3]>> {
    if colors.len() != graph.node_count() {
        return Err(Error::Shape(format!(
            "{} colors for {} nodes",
            colors.len(),
            graph.node_count()
        )));
    }
    spec.validate()?;
    let style_features = encode_style(style, network)?;
    let mut hook = |content: &FeatureMap| linear_transform(content, &style_features, spec);
    let out = network.run(graph, &FeatureMap::from_rgb(colors), &mut hook)?;
    Ok(out
        .to_rgb()?
        .into_iter()
        .map(|c| c.map(|v| v.clamp(0.0, 1.0)))
        .collect())
}
