use std::cmp::Ordering;
use std::collections::BinaryHeap;

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::spatial::KdTree;
use crate::util::stream_rng;

/// Normals with orientation bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalEstimate {
    pub normals: Vec<Vector3<f64>>,
    /// Points whose neighbourhood had zero spread; their normal is the fallback up.
    pub degenerate: Vec<usize>,
    /// `(parent, child)` edges of the spanning forest used to orient signs.
    pub tree: Vec<(usize, usize)>,
}

/// Source of per-point unit normals for graph construction.
pub trait NormalEstimator: Sync {
    fn estimate(&self, points: &[Vector3<f64>], k: usize) -> Result<NormalEstimate>;
}

/// Local PCA with minimum-spanning-tree sign propagation.
#[derive(Debug, Clone, Copy)]
pub struct PcaNormals {
    /// Assigned to points with a degenerate neighbourhood.
    pub fallback: Vector3<f64>,
}

impl Default for PcaNormals {
    fn default() -> Self {
        PcaNormals {
            fallback: Vector3::z(),
        }
    }
}

impl NormalEstimator for PcaNormals {
    fn estimate(&self, points: &[Vector3<f64>], k: usize) -> Result<NormalEstimate> {
        estimate_normals_with(points, k, self.fallback)
    }
}

/// Seeded uniformly random unit normals, ignoring geometry.
#[derive(Debug, Clone, Copy)]
pub struct RandomNormals {
    pub seed: u64,
}

impl NormalEstimator for RandomNormals {
    fn estimate(&self, points: &[Vector3<f64>], _k: usize) -> Result<NormalEstimate> {
        let normals = (0..points.len())
            .into_par_iter()
            .map(|i| {
                let mut rng = stream_rng(self.seed, i as u64);
                loop {
                    let v = Vector3::new(
                        rng.sample::<f64, _>(StandardNormal),
                        rng.sample::<f64, _>(StandardNormal),
                        rng.sample::<f64, _>(StandardNormal),
                    );
                    let n = v.norm();
                    if n > 1e-12 {
                        break v / n;
                    }
                }
            })
            .collect();
        Ok(NormalEstimate {
            normals,
            degenerate: Vec::new(),
            tree: Vec::new(),
        })
    }
}

/// PCA normals over `k`-nearest neighbourhoods, consistently oriented.
pub fn estimate_normals(points: &[Vector3<f64>], k: usize) -> Result<NormalEstimate> {
    PcaNormals::default().estimate(points, k)
}

fn estimate_normals_with(
    points: &[Vector3<f64>],
    k: usize,
    fallback: Vector3<f64>,
) -> Result<NormalEstimate> {
    if k < 3 {
        return Err(Error::InvalidArgument(format!(
            "normal estimation needs k >= 3, got {k}"
        )));
    }
    if points.len() <= k {
        return Err(Error::InsufficientPoints {
            needed: k,
            got: points.len(),
        });
    }
    let tree = KdTree::new(points);
    let table = tree.knn_table(k)?;

    let raw: Vec<Option<Vector3<f64>>> = table
        .par_chunks(k)
        .enumerate()
        .map(|(i, nbrs)| pca_normal(points, i, nbrs))
        .collect();

    let mut degenerate = Vec::new();
    let mut normals: Vec<Vector3<f64>> = raw
        .into_iter()
        .enumerate()
        .map(|(i, n)| {
            n.unwrap_or_else(|| {
                degenerate.push(i);
                fallback
            })
        })
        .collect();

    let tree_edges = orient(points, &mut normals, &table, k);
    Ok(NormalEstimate {
        normals,
        degenerate,
        tree: tree_edges,
    })
}

fn pca_normal(points: &[Vector3<f64>], i: usize, nbrs: &[usize]) -> Option<Vector3<f64>> {
    let count = (nbrs.len() + 1) as f64;
    let centroid = (points[i] + nbrs.iter().map(|&j| points[j]).sum::<Vector3<f64>>()) / count;
    let mut cov = Matrix3::zeros();
    let mut scale = 0.0f64;
    for p in std::iter::once(&points[i]).chain(nbrs.iter().map(|&j| &points[j])) {
        let d = p - centroid;
        cov += d * d.transpose();
        scale = scale.max(p.amax());
    }
    let spread = cov.trace();
    if !(spread > 1e-24 * (1.0 + scale * scale)) {
        return None;
    }
    let eig = SymmetricEigen::new(cov);
    let min = eig.eigenvalues.imin();
    let n = eig.eigenvectors.column(min).into_owned();
    let len = n.norm();
    (len > 0.0).then(|| n / len)
}

#[derive(PartialEq)]
struct Candidate {
    cost: f64,
    node: usize,
    parent: usize,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on (cost, node, parent).
        other
            .cost
            .total_cmp(&self.cost)
            .then(other.node.cmp(&self.node))
            .then(other.parent.cmp(&self.parent))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Flips normals along a minimum spanning forest of the symmetrized KNN graph, with
/// edge cost `1 - |n_i . n_j|`. Each component's root is its point farthest from the
/// cloud centroid, pointed away from the centroid.
fn orient(
    points: &[Vector3<f64>],
    normals: &mut [Vector3<f64>],
    table: &[usize],
    k: usize,
) -> Vec<(usize, usize)> {
    let n = points.len();
    let mut adj: Vec<Vec<usize>> = vec![Vec::with_capacity(2 * k); n];
    for i in 0..n {
        for &j in &table[i * k..(i + 1) * k] {
            adj[i].push(j);
            adj[j].push(i);
        }
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }

    let centroid = points.iter().sum::<Vector3<f64>>() / n as f64;
    let mut component = vec![usize::MAX; n];
    let mut visited = vec![false; n];
    let mut tree = Vec::with_capacity(n.saturating_sub(1));
    let mut heap = BinaryHeap::new();

    for start in 0..n {
        if component[start] != usize::MAX {
            continue;
        }
        // Collect the component to pick its root.
        let mut members = vec![start];
        component[start] = start;
        let mut head = 0;
        while head < members.len() {
            let u = members[head];
            head += 1;
            for &v in &adj[u] {
                if component[v] == usize::MAX {
                    component[v] = start;
                    members.push(v);
                }
            }
        }
        let root = members
            .iter()
            .copied()
            .max_by(|&a, &b| {
                (points[a] - centroid)
                    .norm_squared()
                    .total_cmp(&(points[b] - centroid).norm_squared())
                    .then(b.cmp(&a))
            })
            .unwrap();
        orient_root(&mut normals[root], points[root] - centroid);

        visited[root] = true;
        for &v in &adj[root] {
            heap.push(Candidate {
                cost: 1.0 - normals[root].dot(&normals[v]).abs(),
                node: v,
                parent: root,
            });
        }
        while let Some(Candidate { node, parent, .. }) = heap.pop() {
            if visited[node] {
                continue;
            }
            visited[node] = true;
            if normals[node].dot(&normals[parent]) < 0.0 {
                normals[node] = -normals[node];
            }
            tree.push((parent, node));
            for &v in &adj[node] {
                if !visited[v] {
                    heap.push(Candidate {
                        cost: 1.0 - normals[node].dot(&normals[v]).abs(),
                        node: v,
                        parent: node,
                    });
                }
            }
        }
    }
    tree
}

fn orient_root(normal: &mut Vector3<f64>, outward: Vector3<f64>) {
    let d = normal.dot(&outward);
    let flip = if d.abs() > 1e-9 * outward.norm() {
        d < 0.0
    } else {
        let axis = normal.iamax();
        normal[axis] < 0.0
    };
    if flip {
        *normal = -*normal;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn fibonacci_sphere(n: usize) -> Vec<Vector3<f64>> {
        let (scene, _) = crate::splat_io::make_noisy_sphere(n, 0, 0);
        scene.centers()
    }

    #[test]
    fn plane_normals_are_consistent() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let pts: Vec<_> = (0..100)
            .map(|_| Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), 0.0))
            .collect();
        let est = estimate_normals(&pts, 8).unwrap();
        let first = est.normals[0];
        assert!((first.z.abs() - 1.0).abs() < 1e-9);
        for n in &est.normals {
            assert!((n - first).norm() < 1e-9, "{n} vs {first}");
        }
        assert!(est.degenerate.is_empty());
    }

    #[test]
    fn sphere_normals_are_radial() {
        let pts = fibonacci_sphere(2000);
        let est = estimate_normals(&pts, 16).unwrap();
        let good = est
            .normals
            .iter()
            .zip(&pts)
            .filter(|(n, p)| n.dot(&p.normalize()).abs() > 0.99)
            .count();
        assert!(good as f64 >= 0.99 * pts.len() as f64, "{good}");
        // Closed surface: orientation comes out uniformly outward.
        assert!(est.normals.iter().zip(&pts).all(|(n, p)| n.dot(p) > 0.0));
    }

    #[test]
    fn tree_edges_agree_in_sign() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        let pts: Vec<_> = (0..500)
            .map(|_| {
                Vector3::new(
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                )
            })
            .collect();
        let est = estimate_normals(&pts, 10).unwrap();
        assert_eq!(est.tree.len(), pts.len() - 1);
        for &(a, b) in &est.tree {
            assert!(est.normals[a].dot(&est.normals[b]) >= 0.0);
        }
    }

    #[test]
    fn too_few_points() {
        let pts = fibonacci_sphere(3);
        assert!(matches!(
            estimate_normals(&pts, 3),
            Err(Error::InsufficientPoints { .. })
        ));
    }

    #[test]
    fn duplicate_points_fall_back_to_up() {
        let mut pts = vec![Vector3::new(0.0, 0.0, 0.0); 10];
        pts.extend(fibonacci_sphere(20).into_iter().map(|p| p * 10.0));
        let est = estimate_normals(&pts, 5).unwrap();
        assert!(est.degenerate.contains(&0));
        assert!((est.normals[0].z.abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn random_normals_are_unit_and_seeded() {
        let pts = fibonacci_sphere(50);
        let a = RandomNormals { seed: 4 }.estimate(&pts, 16).unwrap();
        let b = RandomNormals { seed: 4 }.estimate(&pts, 16).unwrap();
        let c = RandomNormals { seed: 5 }.estimate(&pts, 16).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.normals.iter().all(|n| (n.norm() - 1.0).abs() < 1e-12));
    }
}
