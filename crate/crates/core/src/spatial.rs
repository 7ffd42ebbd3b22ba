//! Static 3D kd-tree for exact k-nearest-neighbour queries.
//!
//! Neighbours are ordered by `(squared distance, index)`, so equidistant candidates
//! are resolved toward the lower point index and results match an all-pairs scan
//! exactly.

use nalgebra::Vector3;
use rayon::prelude::*;

use crate::error::{Error, Result};

const LEAF_SIZE: usize = 12;

#[derive(Debug, Clone)]
enum Node {
    Leaf {
        start: u32,
        end: u32,
    },
    Split {
        axis: u8,
        value: f64,
        left: u32,
        right: u32,
    },
}

#[derive(Debug, Clone)]
pub struct KdTree<'a> {
    points: &'a [Vector3<f64>],
    order: Vec<u32>,
    nodes: Vec<Node>,
}

/// Sorted candidate list of bounded length.
struct Candidates {
    k: usize,
    items: Vec<(f64, u32)>,
}

impl Candidates {
    fn new(k: usize) -> Self {
        Candidates {
            k,
            items: Vec::with_capacity(k + 1),
        }
    }

    fn full(&self) -> bool {
        self.items.len() == self.k
    }

    fn worst(&self) -> f64 {
        self.items.last().map_or(f64::INFINITY, |c| c.0)
    }

    fn offer(&mut self, d2: f64, idx: u32) {
        let cand = (d2, idx);
        if self.full() {
            let last = self.items[self.k - 1];
            if (cand.0, cand.1) >= (last.0, last.1) {
                return;
            }
        }
        let pos = self
            .items
            .partition_point(|&(d, i)| (d, i) < (cand.0, cand.1));
        self.items.insert(pos, cand);
        self.items.truncate(self.k);
    }
}

impl<'a> KdTree<'a> {
    pub fn new(points: &'a [Vector3<f64>]) -> Self {
        let mut order: Vec<u32> = (0..points.len() as u32).collect();
        let mut nodes = Vec::with_capacity(2 * points.len() / LEAF_SIZE + 1);
        if !points.is_empty() {
            build(points, &mut order, 0, &mut nodes);
        }
        KdTree {
            points,
            order,
            nodes,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// The `k` nearest points to `query` as `(index, squared distance)`, nearest first.
    /// `exclude` removes one index (typically the query point itself) from consideration.
    pub fn nearest(
        &self,
        query: &Vector3<f64>,
        k: usize,
        exclude: Option<usize>,
    ) -> Vec<(usize, f64)> {
        if k == 0 || self.nodes.is_empty() {
            return Vec::new();
        }
        let mut cands = Candidates::new(k);
        self.search(0, query, exclude.map(|e| e as u32), &mut cands);
        cands
            .items
            .into_iter()
            .map(|(d2, i)| (i as usize, d2))
            .collect()
    }

    fn search(&self, node: usize, q: &Vector3<f64>, exclude: Option<u32>, cands: &mut Candidates) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &idx in &self.order[start as usize..end as usize] {
                    if Some(idx) == exclude {
                        continue;
                    }
                    let d2 = (self.points[idx as usize] - q).norm_squared();
                    cands.offer(d2, idx);
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = q[axis as usize] - value;
                let (near, far) = if diff < 0.0 {
                    (left, right)
                } else {
                    (right, left)
                };
                self.search(near as usize, q, exclude, cands);
                // Equality must still descend: a tie at the boundary can win on index.
                if !cands.full() || diff * diff <= cands.worst() {
                    self.search(far as usize, q, exclude, cands);
                }
            }
        }
    }

    /// Flat `n * k` neighbour table of every indexed point, excluding itself.
    pub fn knn_table(&self, k: usize) -> Result<Vec<usize>> {
        let n = self.points.len();
        if n <= k {
            return Err(Error::InsufficientPoints { needed: k, got: n });
        }
        let mut table = vec![0usize; n * k];
        if k == 0 {
            return Ok(table);
        }
        table.par_chunks_mut(k).enumerate().for_each(|(i, row)| {
            for (slot, (j, _)) in row
                .iter_mut()
                .zip(self.nearest(&self.points[i], k, Some(i)))
            {
                *slot = j;
            }
        });
        Ok(table)
    }
}

fn build(points: &[Vector3<f64>], order: &mut [u32], offset: u32, nodes: &mut Vec<Node>) -> u32 {
    let id = nodes.len() as u32;
    if order.len() <= LEAF_SIZE {
        nodes.push(Node::Leaf {
            start: offset,
            end: offset + order.len() as u32,
        });
        return id;
    }

    let mut lo = Vector3::repeat(f64::INFINITY);
    let mut hi = Vector3::repeat(f64::NEG_INFINITY);
    for &i in order.iter() {
        let p = &points[i as usize];
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    let extent = hi - lo;
    let axis = extent.imax();
    if extent[axis] == 0.0 {
        nodes.push(Node::Leaf {
            start: offset,
            end: offset + order.len() as u32,
        });
        return id;
    }

    let mid = order.len() / 2;
    order.select_nth_unstable_by(mid, |&a, &b| {
        points[a as usize][axis].total_cmp(&points[b as usize][axis])
    });
    let value = points[order[mid] as usize][axis];

    nodes.push(Node::Leaf { start: 0, end: 0 });
    let (left_part, right_part) = order.split_at_mut(mid);
    let left = build(points, left_part, offset, nodes);
    let right = build(points, right_part, offset + mid as u32, nodes);
    nodes[id as usize] = Node::Split {
        axis: axis as u8,
        value,
        left,
        right,
    };
    id
}
