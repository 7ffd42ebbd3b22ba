//! Oriented KNN graphs over point clouds and image grids.
//!
//! Each node carries a tangent frame; each directed edge `i -> j` is assigned one or
//! two of the eight planar direction bins by projecting `pos_j - pos_i` into node
//! `i`'s frame. An image grid built by [`grid_graph`] reproduces pixel
//! 8-connectivity exactly, so 3x3 kernel taps map one-to-one onto the bins.

mod frames;
mod normals;
mod pool;
mod selection;

pub use frames::{build_frames, Frame};
pub use normals::{estimate_normals, NormalEstimate, NormalEstimator, PcaNormals, RandomNormals};
pub use pool::{downsample_graph, PoolMap};
pub use selection::{
    assign_selections, knn_edges, select_edge, selection_for_angle, Selection, SelectionSet,
    NUM_BINS,
};

use nalgebra::Vector3;
use serde::Serialize;

use crate::error::{Error, Result};

/// Regular pixel lattice a graph was built from; nodes are row-major.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Lattice {
    pub height: usize,
    pub width: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceGraph {
    pub positions: Vec<Vector3<f64>>,
    pub frames: Vec<Frame>,
    /// Directed `(src, dst)`: `src` gathers from `dst`. Sorted by `src`, self-loop first.
    pub edges: Vec<(usize, usize)>,
    pub selections: Vec<Selection>,
    /// Edges with no tangential component, binned by nearest angle.
    pub flagged_edges: Vec<usize>,
    pub up: Vector3<f64>,
    /// Neighbour count used when coarser levels are rebuilt.
    pub k: usize,
    pub lattice: Option<Lattice>,
}

/// How far edges leave the local tangent plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DepthStats {
    /// Mean of `|e . n_i| / |e|` over non-self edges.
    pub mean_normal_fraction: f64,
    pub max_normal_fraction: f64,
    pub flagged_edges: usize,
}

impl SurfaceGraph {
    /// Frames from `normals` and `up`, KNN edges and bin selections.
    pub fn build(
        positions: Vec<Vector3<f64>>,
        normals: &[Vector3<f64>],
        up: Vector3<f64>,
        k: usize,
    ) -> Result<SurfaceGraph> {
        if normals.len() != positions.len() {
            return Err(Error::Shape(format!(
                "{} normals for {} points",
                normals.len(),
                positions.len()
            )));
        }
        let up = unit_up(up)?;
        let frames = build_frames(normals, up);
        let edges = knn_edges(&positions, k)?;
        let SelectionSet {
            selections,
            flagged,
        } = assign_selections(&positions, &frames, &edges);
        Ok(SurfaceGraph {
            positions,
            frames,
            edges,
            selections,
            flagged_edges: flagged,
            up,
            k,
            lattice: None,
        })
    }

    /// Full graph construction from raw points: normals from `estimator`, then [`Self::build`].
    pub fn from_points(
        positions: Vec<Vector3<f64>>,
        estimator: &dyn NormalEstimator,
        up: Vector3<f64>,
        k: usize,
    ) -> Result<SurfaceGraph> {
        let est = estimator.estimate(&positions, k)?;
        SurfaceGraph::build(positions, &est.normals, up, k)
    }

    pub fn node_count(&self) -> usize {
        self.positions.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn normals(&self) -> Vec<Vector3<f64>> {
        self.frames.iter().map(|f| f.normal).collect()
    }

    pub fn mean_edge_length(&self) -> f64 {
        let (sum, count) = self
            .edges
            .iter()
            .filter(|(i, j)| i != j)
            .fold((0.0, 0usize), |(s, c), &(i, j)| {
                (s + (self.positions[j] - self.positions[i]).norm(), c + 1)
            });
        if count == 0 {
            0.0
        } else {
            sum / count as f64
        }
    }

    /// Mean distance from each node to its nearest graph neighbour.
    pub fn mean_spacing(&self) -> f64 {
        let mut nearest = vec![f64::INFINITY; self.node_count()];
        for &(i, j) in &self.edges {
            if i != j {
                let d = (self.positions[j] - self.positions[i]).norm();
                nearest[i] = nearest[i].min(d);
            }
        }
        let (sum, count) = nearest
            .iter()
            .filter(|d| d.is_finite())
            .fold((0.0, 0usize), |(s, c), d| (s + d, c + 1));
        if count == 0 {
            0.0
        } else {
            sum / count as f64
        }
    }

    pub fn depth_stats(&self) -> DepthStats {
        let mut sum = 0.0;
        let mut max = 0.0f64;
        let mut count = 0usize;
        for &(i, j) in &self.edges {
            let e = self.positions[j] - self.positions[i];
            let len = e.norm();
            if i == j || len == 0.0 {
                continue;
            }
            let frac = e.dot(&self.frames[i].normal).abs() / len;
            sum += frac;
            max = max.max(frac);
            count += 1;
        }
        DepthStats {
            mean_normal_fraction: if count == 0 { 0.0 } else { sum / count as f64 },
            max_normal_fraction: max,
            flagged_edges: self.flagged_edges.len(),
        }
    }

    /// Serializable view for external visualization.
    pub fn dump(&self) -> GraphDump {
        GraphDump {
            positions: self.positions.iter().map(|p| [p.x, p.y, p.z]).collect(),
            normals: self
                .frames
                .iter()
                .map(|f| [f.normal.x, f.normal.y, f.normal.z])
                .collect(),
            edges: self.edges.iter().map(|&(i, j)| [i, j]).collect(),
            bins: self
                .selections
                .iter()
                .map(|s| s.entries().to_vec())
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GraphDump {
    pub positions: Vec<[f64; 3]>,
    pub normals: Vec<[f64; 3]>,
    pub edges: Vec<[usize; 2]>,
    /// Per-edge `(bin, weight)` pairs.
    pub bins: Vec<Vec<(u8, f64)>>,
}

fn unit_up(up: Vector3<f64>) -> Result<Vector3<f64>> {
    let len = up.norm();
    if !(len > 0.0) || !len.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "up vector {up:?} has no direction"
        )));
    }
    Ok(up / len)
}

/// Up vector under which [`grid_graph`] bins match image rows and columns.
pub fn grid_up() -> Vector3<f64> {
    -Vector3::y()
}

/// Lattice edges: self-loop, then the existing 8-neighbours in index order.
fn lattice_edges(height: usize, width: usize) -> Vec<(usize, usize)> {
    let mut edges = Vec::with_capacity(height * width * 9);
    for row in 0..height as isize {
        for col in 0..width as isize {
            let i = (row * width as isize + col) as usize;
            for dr in -1..=1isize {
                for dc in -1..=1isize {
                    let (r, c) = (row + dr, col + dc);
                    if r < 0 || c < 0 || r >= height as isize || c >= width as isize {
                        continue;
                    }
                    edges.push((i, (r * width as isize + c) as usize));
                }
            }
        }
    }
    edges
}

/// One node per pixel at `(col, row, 0)` with normal `+z` and up `-y`: bin 1 is the
/// pixel above, bin 3 the pixel to the right, bin 5 below and bin 7 left.
pub fn grid_graph(height: usize, width: usize) -> Result<SurfaceGraph> {
    let positions = (0..height * width)
        .map(|i| Vector3::new((i % width) as f64, (i / width) as f64, 0.0))
        .collect();
    lattice_graph(height, width, positions, vec![Vector3::z(); height * width])
}

fn lattice_graph(
    height: usize,
    width: usize,
    positions: Vec<Vector3<f64>>,
    normals: Vec<Vector3<f64>>,
) -> Result<SurfaceGraph> {
    if height == 0 || width == 0 {
        return Err(Error::InvalidArgument(format!(
            "grid must be non-empty, got {height}x{width}"
        )));
    }
    let up = grid_up();
    let frames = build_frames(&normals, up);
    let edges = lattice_edges(height, width);
    // Bins follow from the ideal lattice offsets, not from (possibly shifted) centroids.
    let ideal: Vec<Vector3<f64>> = (0..height * width)
        .map(|i| Vector3::new((i % width) as f64, (i / width) as f64, 0.0))
        .collect();
    let ideal_frames = build_frames(&vec![Vector3::z(); height * width], up);
    let set = assign_selections(&ideal, &ideal_frames, &edges);
    Ok(SurfaceGraph {
        positions,
        frames,
        edges,
        selections: set.selections,
        flagged_edges: set.flagged,
        up,
        k: 8,
        lattice: Some(Lattice { height, width }),
    })
}
