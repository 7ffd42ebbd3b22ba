use std::f64::consts::FRAC_PI_4;

use nalgebra::Vector3;
use rayon::prelude::*;

use super::Frame;
use crate::error::Result;
use crate::spatial::KdTree;

/// Direction bins: 0 is the node itself, 1..=8 sit every 45 degrees counter-clockwise
/// in the tangent plane starting at `+tangent`.
pub const NUM_BINS: usize = 9;

/// Snap interpolation weights this close to 0 or 1.
const SNAP: f64 = 1e-9;
/// Tangential length below which an edge is treated as pointing along the normal.
const NORMAL_EDGE_EPS: f64 = 1e-9;

/// An edge's split across at most two direction bins.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Selection {
    entries: [(u8, f64); 2],
    len: u8,
}

impl Selection {
    pub fn pure(bin: u8) -> Self {
        Selection {
            entries: [(bin, 1.0), (0, 0.0)],
            len: 1,
        }
    }

    fn split(a: u8, wa: f64, b: u8, wb: f64) -> Self {
        Selection {
            entries: [(a, wa), (b, wb)],
            len: 2,
        }
    }

    pub fn entries(&self) -> &[(u8, f64)] {
        &self.entries[..self.len as usize]
    }

    pub fn is_pure(&self) -> bool {
        self.len == 1
    }
}

/// Bin weights for an angle in the tangent plane, measured counter-clockwise from `+tangent`.
pub fn selection_for_angle(theta: f64) -> Selection {
    let mut t = theta / FRAC_PI_4;
    if t < 0.0 {
        t += 8.0;
    }
    let base = t.floor();
    let frac = t - base;
    let lo = (base as i64).rem_euclid(8) as u8;
    let hi = (lo + 1) % 8;
    if frac < SNAP {
        Selection::pure(lo + 1)
    } else if frac > 1.0 - SNAP {
        Selection::pure(hi + 1)
    } else {
        Selection::split(lo + 1, 1.0 - frac, hi + 1, frac)
    }
}

/// Selection of a non-self edge `e` seen from a node with the given frame, and whether it
/// is degenerate (no usable tangential component).
pub fn select_edge(e: &Vector3<f64>, frame: &Frame) -> (Selection, bool) {
    let (x, y) = frame.project(e);
    let theta = y.atan2(x);
    let tangential = x.hypot(y);
    if tangential <= NORMAL_EDGE_EPS * e.norm() || tangential == 0.0 {
        let nearest = ((theta / FRAC_PI_4).round() as i64).rem_euclid(8) as u8;
        return (Selection::pure(nearest + 1), true);
    }
    (selection_for_angle(theta), false)
}

/// Directed KNN edges: for each node a self-loop followed by its `k` nearest others,
/// nearest first.
pub fn knn_edges(points: &[Vector3<f64>], k: usize) -> Result<Vec<(usize, usize)>> {
    let tree = KdTree::new(points);
    let table = tree.knn_table(k)?;
    let mut edges = Vec::with_capacity(points.len() * (k + 1));
    for i in 0..points.len() {
        edges.push((i, i));
        edges.extend(table[i * k..(i + 1) * k].iter().map(|&j| (i, j)));
    }
    Ok(edges)
}

/// Per-edge selections plus the indices of edges that ran along the normal.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionSet {
    pub selections: Vec<Selection>,
    pub flagged: Vec<usize>,
}

/// Bins each edge `(i, j)` by projecting `pos_j - pos_i` into node `i`'s frame.
pub fn assign_selections(
    positions: &[Vector3<f64>],
    frames: &[Frame],
    edges: &[(usize, usize)],
) -> SelectionSet {
    let per_edge: Vec<(Selection, bool)> = edges
        .par_iter()
        .map(|&(i, j)| {
            if i == j {
                (Selection::pure(0), false)
            } else {
                select_edge(&(positions[j] - positions[i]), &frames[i])
            }
        })
        .collect();
    let flagged = per_edge
        .iter()
        .enumerate()
        .filter_map(|(e, s)| s.1.then_some(e))
        .collect();
    SelectionSet {
        selections: per_edge.into_iter().map(|s| s.0).collect(),
        flagged,
    }
}
