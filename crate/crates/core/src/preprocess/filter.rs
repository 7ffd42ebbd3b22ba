use nalgebra::Vector3;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::spatial::KdTree;
use crate::splat_io::SplatScene;

/// Per-point noise scores and the outcome of a percentile cut.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterReport {
    /// `|p - p_m|` where `p_m` is the mean of the K nearest other points.
    pub offset_norms: Vec<f64>,
    /// Largest offset among the survivors. Every splat scoring above it was removed;
    /// splats tied with it are split by index.
    pub threshold: f64,
    /// Removed splat indices, ascending.
    pub removed: Vec<usize>,
}

/// JSON summary written by the command line tool.
#[derive(Debug, Clone, Serialize)]
pub struct FilterDiagnostics {
    pub total: usize,
    pub removed_count: usize,
    pub threshold: f64,
    pub histogram_edges: Vec<f64>,
    pub histogram_counts: Vec<usize>,
}

impl FilterReport {
    pub fn diagnostics(&self, bins: usize) -> FilterDiagnostics {
        let bins = bins.max(1);
        let max = self.offset_norms.iter().cloned().fold(0.0, f64::max);
        let width = if max > 0.0 { max / bins as f64 } else { 1.0 };
        let mut counts = vec![0; bins];
        for &d in &self.offset_norms {
            let b = ((d / width) as usize).min(bins - 1);
            counts[b] += 1;
        }
        FilterDiagnostics {
            total: self.offset_norms.len(),
            removed_count: self.removed.len(),
            threshold: self.threshold,
            histogram_edges: (0..=bins).map(|i| i as f64 * width).collect(),
            histogram_counts: counts,
        }
    }
}

/// Distance from each point to the centroid of its `k` nearest neighbours (itself excluded).
pub fn neighborhood_offsets(points: &[Vector3<f64>], k: usize) -> Result<Vec<f64>> {
    if k == 0 {
        return Err(Error::InvalidArgument(
            "neighbourhood size must be at least 1".into(),
        ));
    }
    if points.len() <= k {
        return Err(Error::InsufficientPoints {
            needed: k,
            got: points.len(),
        });
    }
    let tree = KdTree::new(points);
    let table = tree.knn_table(k)?;
    Ok(table
        .par_chunks(k)
        .zip(points.par_iter())
        .map(|(nbrs, p)| {
            let mean = nbrs.iter().map(|&j| points[j]).sum::<Vector3<f64>>() / k as f64;
            (p - mean).norm()
        })
        .collect())
}

/// Number of points a percentile cut removes: `ceil(percentile * n)`.
pub fn removal_count(percentile: f64, n: usize) -> usize {
    // Absorb representation error so that e.g. 500/5500 * 5500 removes exactly 500.
    let raw = percentile * n as f64;
    ((raw - 1e-9 * raw.max(1.0)).ceil().max(0.0) as usize).min(n)
}

/// Ranks offsets and removes the top `ceil(percentile * n)`; equal offsets go lower index first.
pub fn percentile_cut(offset_norms: Vec<f64>, percentile: f64) -> Result<FilterReport> {
    if !(0.0..1.0).contains(&percentile) {
        return Err(Error::InvalidArgument(format!(
            "percentile must lie in [0, 1), got {percentile}"
        )));
    }
    let n = offset_norms.len();
    let remove = removal_count(percentile, n);
    let mut ranked: Vec<usize> = (0..n).collect();
    ranked.sort_by(|&a, &b| offset_norms[b].total_cmp(&offset_norms[a]).then(a.cmp(&b)));
    let mut removed = ranked[..remove].to_vec();
    removed.sort_unstable();
    let threshold = ranked[remove..]
        .first()
        .map_or(f64::NEG_INFINITY, |&i| offset_norms[i]);
    Ok(FilterReport {
        offset_norms,
        threshold,
        removed,
    })
}

/// Drops the splats with the largest neighbourhood offsets. Survivor order is preserved.
pub fn filter_by_percentile(
    scene: &SplatScene,
    k: usize,
    percentile: f64,
) -> Result<(SplatScene, FilterReport)> {
    if !(0.0..1.0).contains(&percentile) {
        return Err(Error::InvalidArgument(format!(
            "percentile must lie in [0, 1), got {percentile}"
        )));
    }
    let offsets = neighborhood_offsets(&scene.centers(), k)?;
    let report = percentile_cut(offsets, percentile)?;
    let survivors = survivors(scene.len(), &report.removed);
    Ok((scene.select(&survivors), report))
}

/// Indices in `0..n` not listed in the ascending `removed`.
pub fn survivors(n: usize, removed: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(n - removed.len());
    let mut r = removed.iter().peekable();
    for i in 0..n {
        if r.peek() == Some(&&i) {
            r.next();
        } else {
            out.push(i);
        }
    }
    out
}
