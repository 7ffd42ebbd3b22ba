use std::collections::HashMap;

use nalgebra::Vector3;

use super::{lattice_graph, Lattice, SurfaceGraph};
use crate::error::{Error, Result};

/// Fine-to-coarse node assignment produced by one pooling step.
#[derive(Debug, Clone, PartialEq)]
pub struct PoolMap {
    pub cluster_of: Vec<usize>,
    pub coarse_positions: Vec<Vector3<f64>>,
}

impl PoolMap {
    pub fn coarse_count(&self) -> usize {
        self.coarse_positions.len()
    }

    pub fn member_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.coarse_count()];
        for &c in &self.cluster_of {
            counts[c] += 1;
        }
        counts
    }
}

/// Voxel clustering of node positions. Coarse nodes sit at member centroids and are
/// numbered in order of first appearance.
///
/// Lattice graphs pooled with an integral voxel use aligned `voxel x voxel` pixel
/// blocks and stay lattices. Other graphs get fresh KNN edges and selections at the
/// coarse level.
pub fn downsample_graph(graph: &SurfaceGraph, voxel: f64) -> Result<(SurfaceGraph, PoolMap)> {
    if !(voxel > 0.0) || !voxel.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "voxel size must be positive, got {voxel}"
        )));
    }
    let n = graph.node_count();
    if n == 0 {
        return Err(Error::InsufficientPoints { needed: 0, got: 0 });
    }

    let lattice_block = match graph.lattice {
        Some(l) if voxel.fract() == 0.0 => Some((l, voxel as usize)),
        _ => None,
    };

    let (cluster_of, coarse_n, coarse_lattice): (Vec<usize>, usize, Option<(usize, usize)>) =
        match lattice_block {
            Some((Lattice { height, width }, b)) => {
                let cw = width.div_ceil(b);
                let ch = height.div_ceil(b);
                let cluster_of = (0..n)
                    .map(|i| ((i / width) / b) * cw + (i % width) / b)
                    .collect();
                (cluster_of, ch * cw, Some((ch, cw)))
            }
            None => {
                let origin = graph
                    .positions
                    .iter()
                    .fold(Vector3::repeat(f64::INFINITY), |m, p| m.inf(p));
                let mut ids: HashMap<[i64; 3], usize> = HashMap::new();
                let cluster_of = graph
                    .positions
                    .iter()
                    .map(|p| {
                        let key = ((p - origin) / voxel).map(|v| v.floor() as i64);
                        let next = ids.len();
                        *ids.entry([key.x, key.y, key.z]).or_insert(next)
                    })
                    .collect();
                (cluster_of, ids.len(), None)
            }
        };

    let mut sums = vec![Vector3::zeros(); coarse_n];
    let mut normal_sums = vec![Vector3::zeros(); coarse_n];
    let mut first_normal: Vec<Option<Vector3<f64>>> = vec![None; coarse_n];
    let mut counts = vec![0usize; coarse_n];
    for (i, &c) in cluster_of.iter().enumerate() {
        sums[c] += graph.positions[i];
        normal_sums[c] += graph.frames[i].normal;
        first_normal[c].get_or_insert(graph.frames[i].normal);
        counts[c] += 1;
    }
    let coarse_positions: Vec<Vector3<f64>> = sums
        .iter()
        .zip(&counts)
        .map(|(s, &c)| s / c as f64)
        .collect();
    let coarse_normals: Vec<Vector3<f64>> = normal_sums
        .iter()
        .zip(&first_normal)
        .map(|(s, first)| {
            let len = s.norm();
            if len > 1e-9 {
                s / len
            } else {
                first.expect("every cluster has a member")
            }
        })
        .collect();

    let coarse = match coarse_lattice {
        Some((h, w)) => lattice_graph(h, w, coarse_positions.clone(), coarse_normals)?,
        None => {
            let k = graph.k.min(coarse_n.saturating_sub(1));
            let mut g =
                SurfaceGraph::build(coarse_positions.clone(), &coarse_normals, graph.up, k)?;
            g.k = graph.k;
            g
        }
    };
    Ok((
        coarse,
        PoolMap {
            cluster_of,
            coarse_positions,
        },
    ))
}
