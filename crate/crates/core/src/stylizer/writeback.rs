use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::preprocess::PointCloud;
use crate::spatial::KdTree;
use crate::splat_io::SplatScene;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WritebackOptions {
    /// Graph nodes blended per splat center.
    pub neighbors: usize,
    /// Clear view-dependent SH coefficients of recolored splats.
    pub zero_rest: bool,
    /// Omit `removed` splats from the output instead of keeping them unchanged.
    pub drop_removed: bool,
}

impl Default for WritebackOptions {
    fn default() -> Self {
        WritebackOptions {
            neighbors: 4,
            zero_rest: true,
            drop_removed: true,
        }
    }
}

/// Inverse-distance weighted color at `query`; a node at distance zero wins outright.
pub fn idw_color(
    tree: &KdTree<'_>,
    rgb: &[[f64; 3]],
    query: &nalgebra::Vector3<f64>,
    k: usize,
) -> [f64; 3] {
    let hits = tree.nearest(query, k, None);
    if let Some(&(j, _)) = hits.iter().find(|(_, d2)| *d2 == 0.0) {
        return rgb[j];
    }
    let mut acc = [0.0; 3];
    let mut total = 0.0;
    for &(j, d2) in &hits {
        let w = 1.0 / d2.sqrt();
        total += w;
        for c in 0..3 {
            acc[c] += w * rgb[j][c];
        }
    }
    acc.map(|v| v / total)
}

/// Recolors every splat not listed in `removed` (sorted ascending) from the node
/// colors of `cloud`.
pub fn writeback(
    scene: &SplatScene,
    removed: &[usize],
    cloud: &PointCloud,
    node_rgb: &[[f64; 3]],
    opts: &WritebackOptions,
) -> Result<SplatScene> {
    if cloud.is_empty() {
        return Err(Error::InsufficientPoints { needed: 1, got: 0 });
    }
    if node_rgb.len() != cloud.len() {
        return Err(Error::Shape(format!(
            "{} node colors for {} graph nodes",
            node_rgb.len(),
            cloud.len()
        )));
    }
    if opts.neighbors == 0 {
        return Err(Error::InvalidArgument(
            "writeback needs at least one neighbour".into(),
        ));
    }
    let tree = KdTree::new(&cloud.points);
    let k = opts.neighbors.min(cloud.len());

    let mut is_removed = vec![false; scene.len()];
    for &r in removed {
        is_removed[r] = true;
    }
    let recolored: Vec<_> = scene
        .splats
        .par_iter()
        .zip(&is_removed)
        .map(|(s, &gone)| {
            let mut s = s.clone();
            if !gone {
                s.set_base_color(idw_color(&tree, node_rgb, &s.center(), k), opts.zero_rest);
            }
            s
        })
        .collect();

    let mut out = scene.clone();
    out.splats = recolored;
    if opts.drop_removed && !removed.is_empty() {
        let keep: Vec<usize> = (0..scene.len()).filter(|&i| !is_removed[i]).collect();
        out = out.select(&keep);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use nalgebra::Vector3;
    use proptest::prelude::*;

    use super::*;
    use crate::splat_io::Splat;

    fn cloud(points: Vec<Vector3<f64>>) -> PointCloud {
        let n = points.len();
        PointCloud {
            points,
            source: (0..n).collect(),
            colors: vec![[0.0; 3]; n],
        }
    }

    fn splat_at(p: [f32; 3]) -> Splat {
        Splat {
            position: p,
            ..Default::default()
        }
    }

    #[test]
    fn equidistant_pair_averages() {
        let c = cloud(vec![
            Vector3::new(-1.0, 0.0, 0.0),
            Vector3::new(1.0, 0.0, 0.0),
        ]);
        let tree = KdTree::new(&c.points);
        let rgb = [[0.2, 0.4, 0.6], [0.6, 0.0, 1.0]];
        let got = idw_color(&tree, &rgb, &Vector3::zeros(), 2);
        for (g, e) in got.iter().zip([0.4, 0.2, 0.8]) {
            assert!((g - e).abs() < 1e-12);
        }
    }

    #[test]
    fn coincident_node_is_exact() {
        let c = cloud(vec![Vector3::zeros(), Vector3::new(0.1, 0.0, 0.0)]);
        let tree = KdTree::new(&c.points);
        let rgb = [[0.3, 0.3, 0.3], [1.0, 1.0, 1.0]];
        assert_eq!(idw_color(&tree, &rgb, &Vector3::zeros(), 2), rgb[0]);
    }

    #[test]
    fn removed_splats_kept_or_dropped() {
        let scene = SplatScene::new(vec![splat_at([0.0; 3]), splat_at([5.0, 0.0, 0.0])]);
        let c = cloud(vec![Vector3::zeros()]);
        let rgb = [[0.9, 0.1, 0.5]];
        let mut opts = WritebackOptions {
            drop_removed: false,
            ..Default::default()
        };
        let kept = writeback(&scene, &[1], &c, &rgb, &opts).unwrap();
        assert_eq!(kept.len(), 2);
        assert_eq!(kept.splats[1], scene.splats[1]);
        let got = kept.splats[0].base_color();
        assert!(got.iter().zip(rgb[0]).all(|(a, b)| (a - b).abs() < 1e-6));
        opts.drop_removed = true;
        assert_eq!(writeback(&scene, &[1], &c, &rgb, &opts).unwrap().len(), 1);
        assert!(matches!(
            writeback(&scene, &[], &cloud(vec![]), &[], &opts),
            Err(Error::InsufficientPoints { .. })
        ));
    }

    proptest! {
        #[test]
        fn colors_stay_in_neighbour_hull(
            pts in prop::collection::vec((-5.0..5.0f64, -5.0..5.0f64, -5.0..5.0f64), 3..30),
            cols in prop::collection::vec((0.0..1.0f64, 0.0..1.0f64, 0.0..1.0f64), 30),
            q in (-6.0..6.0f64, -6.0..6.0f64, -6.0..6.0f64),
            k in 1usize..5,
        ) {
            let points: Vec<_> = pts.iter().map(|&(x, y, z)| Vector3::new(x, y, z)).collect();
            let rgb: Vec<[f64; 3]> = cols[..points.len()].iter().map(|&(a, b, c)| [a, b, c]).collect();
            let tree = KdTree::new(&points);
            let query = Vector3::new(q.0, q.1, q.2);
            let k = k.min(points.len());
            let got = idw_color(&tree, &rgb, &query, k);
            let hits = tree.nearest(&query, k, None);
            for c in 0..3 {
                let lo = hits.iter().map(|h| rgb[h.0][c]).fold(f64::INFINITY, f64::min);
                let hi = hits.iter().map(|h| rgb[h.0][c]).fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(got[c] >= lo - 1e-12 && got[c] <= hi + 1e-12);
            }
        }
    }
}
