use crate::surface_graph::{SurfaceGraph, NUM_BINS};

/// One direction's adjacency in CSR form: row `i` lists the nodes `i` gathers from.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BinMatrix {
    pub indptr: Vec<usize>,
    pub indices: Vec<u32>,
    pub values: Vec<f32>,
}

impl BinMatrix {
    pub fn row(&self, i: usize) -> (&[u32], &[f32]) {
        let (a, b) = (self.indptr[i], self.indptr[i + 1]);
        (&self.indices[a..b], &self.values[a..b])
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.row(i).1.iter().map(|&v| v as f64).sum()
    }
}

/// The nine per-direction interpolation matrices of a graph, each row-normalized per
/// bin. Bin 0 holds the self-loops.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseDirMatrix {
    nodes: usize,
    bins: [BinMatrix; NUM_BINS],
}

impl SparseDirMatrix {
    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn bin(&self, m: usize) -> &BinMatrix {
        &self.bins[m]
    }

    pub fn nnz(&self) -> usize {
        self.bins.iter().map(BinMatrix::nnz).sum()
    }

    /// Dense `n x n` copy of one bin, for tests and small graphs.
    pub fn to_dense(&self, m: usize) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.nodes]; self.nodes];
        for (i, row) in out.iter_mut().enumerate() {
            let (idx, val) = self.bins[m].row(i);
            for (&j, &v) in idx.iter().zip(val) {
                row[j as usize] += v as f64;
            }
        }
        out
    }
}

/// Scatters every edge's `(bin, weight)` pairs into the bin matrices and normalizes
/// each non-empty `(row, bin)` to sum to one.
pub fn build_dir_matrices(graph: &SurfaceGraph) -> SparseDirMatrix {
    let n = graph.node_count();
    let mut counts = vec![vec![0usize; n + 1]; NUM_BINS];
    for (&(i, _), sel) in graph.edges.iter().zip(&graph.selections) {
        for &(bin, _) in sel.entries() {
            counts[bin as usize][i + 1] += 1;
        }
    }

    let bins = std::array::from_fn(|m| {
        let mut indptr = std::mem::take(&mut counts[m]);
        for r in 0..n {
            indptr[r + 1] += indptr[r];
        }
        let nnz = indptr[n];
        let mut indices = vec![0u32; nnz];
        let mut weights = vec![0f64; nnz];
        let mut cursor = indptr.clone();
        for (&(i, j), sel) in graph.edges.iter().zip(&graph.selections) {
            for &(bin, w) in sel.entries() {
                if bin as usize == m {
                    indices[cursor[i]] = j as u32;
                    weights[cursor[i]] = w;
                    cursor[i] += 1;
                }
            }
        }
        let mut values = vec![0f32; nnz];
        for r in 0..n {
            let span = indptr[r]..indptr[r + 1];
            let total: f64 = weights[span.clone()].iter().sum();
            for k in span {
                values[k] = (weights[k] / total) as f32;
            }
        }
        BinMatrix {
            indptr,
            indices,
            values,
        }
    });

    SparseDirMatrix { nodes: n, bins }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface_graph::grid_graph;

    /// Hand-built image shift: output pixel (r, c) reads input pixel (r + dr, c + dc).
    fn shift_matrix(h: usize, w: usize, dr: isize, dc: isize) -> Vec<Vec<f64>> {
        let mut m = vec![vec![0.0; h * w]; h * w];
        for r in 0..h as isize {
            for c in 0..w as isize {
                let (rr, cc) = (r + dr, c + dc);
                if rr >= 0 && cc >= 0 && rr < h as isize && cc < w as isize {
                    m[(r * w as isize + c) as usize][(rr * w as isize + cc) as usize] = 1.0;
                }
            }
        }
        m
    }

    #[test]
    fn grid_bins_are_image_shifts() {
        let s = build_dir_matrices(&grid_graph(3, 3).unwrap());
        // Bin m looks at offset (dr, dc) in image coordinates.
        let offsets = [
            (0, 0),
            (-1, 0),
            (-1, 1),
            (0, 1),
            (1, 1),
            (1, 0),
            (1, -1),
            (0, -1),
            (-1, -1),
        ];
        for (m, &(dr, dc)) in offsets.iter().enumerate() {
            assert_eq!(s.to_dense(m), shift_matrix(3, 3, dr, dc), "bin {m}");
        }
    }

    #[test]
    fn single_node_graph() {
        let s = build_dir_matrices(&grid_graph(1, 1).unwrap());
        assert_eq!(s.to_dense(0), vec![vec![1.0]]);
        for m in 1..NUM_BINS {
            assert_eq!(s.bin(m).nnz(), 0);
        }
    }

    #[test]
    fn rows_sum_to_zero_or_one() {
        let (scene, _) = crate::splat_io::make_noisy_sphere(400, 40, 2);
        let g = crate::surface_graph::SurfaceGraph::from_points(
            scene.centers(),
            &crate::surface_graph::PcaNormals::default(),
            nalgebra::Vector3::z(),
            16,
        )
        .unwrap();
        let s = build_dir_matrices(&g);
        for m in 0..NUM_BINS {
            for i in 0..s.nodes() {
                let sum = s.bin(m).row_sum(i);
                assert!(
                    sum == 0.0 || (sum - 1.0).abs() < 1e-6,
                    "bin {m} row {i}: {sum}"
                );
                assert!(s.bin(m).row(i).1.iter().all(|&v| v > 0.0 && v <= 1.0));
            }
        }
    }
}
