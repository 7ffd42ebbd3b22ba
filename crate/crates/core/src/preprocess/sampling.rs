use nalgebra::Vector3;
use rand::distributions::{Distribution, WeightedIndex};
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::splat_io::{Splat, SplatScene};
use crate::util::stream_rng;

/// Points fed to graph construction, each tagged with the splat it came from.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud {
    pub points: Vec<Vector3<f64>>,
    /// Index into the scene the cloud was built from.
    pub source: Vec<usize>,
    /// Linear RGB base color of the source splat.
    pub colors: Vec<[f64; 3]>,
}

impl PointCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// `n` draws from the splat's Gaussian, `mu + R S z` with `z ~ N(0, I)`.
pub fn sample_from_splat(splat: &Splat, n: usize, seed: u64) -> Vec<Vector3<f64>> {
    let mut rng = stream_rng(seed, 0);
    let mu = splat.center();
    let transform = splat.rotation_matrix() * nalgebra::Matrix3::from_diagonal(&splat.scales());
    (0..n)
        .map(|_| {
            let z = Vector3::new(
                StandardNormal.sample(&mut rng),
                StandardNormal.sample(&mut rng),
                StandardNormal.sample(&mut rng),
            );
            mu + transform * z
        })
        .collect()
}

/// Sampling precedence: opacity times the geometric mean of the axis scales.
pub fn sampling_weight(splat: &Splat) -> f64 {
    let mean_log = splat.log_scale.iter().map(|&v| v as f64).sum::<f64>() / 3.0;
    splat.opacity() * mean_log.exp()
}

/// Multinomial allocation of `extra` samples across splats by [`sampling_weight`].
pub fn allocate_samples(scene: &SplatScene, extra: usize, seed: u64) -> Result<Vec<usize>> {
    let mut counts = vec![0usize; scene.len()];
    if extra == 0 {
        return Ok(counts);
    }
    let weights: Vec<f64> = scene.splats.iter().map(sampling_weight).collect();
    let dist = WeightedIndex::new(&weights)
        .map_err(|e| Error::InvalidArgument(format!("cannot allocate extra samples: {e}")))?;
    let mut rng = stream_rng(seed, u64::MAX);
    for _ in 0..extra {
        counts[dist.sample(&mut rng)] += 1;
    }
    Ok(counts)
}

/// Every splat center, followed by `extra` points drawn from the splats' Gaussians.
///
/// Sampled points are grouped by source splat in index order. Each splat draws from
/// its own seed-derived stream, so output does not depend on thread scheduling.
pub fn build_point_cloud(scene: &SplatScene, extra: usize, seed: u64) -> Result<PointCloud> {
    if scene.is_empty() {
        return Err(Error::InsufficientPoints { needed: 0, got: 0 });
    }
    let counts = allocate_samples(scene, extra, seed)?;
    let n = scene.len();

    let mut cloud = PointCloud {
        points: scene.centers(),
        source: (0..n).collect(),
        colors: scene.splats.iter().map(Splat::base_color).collect(),
    };

    let sampled: Vec<Vec<Vector3<f64>>> = scene
        .splats
        .par_iter()
        .zip(counts.par_iter())
        .enumerate()
        .map(|(i, (splat, &c))| {
            if c == 0 {
                Vec::new()
            } else {
                sample_from_splat(splat, c, crate::util::mix_seed(seed, i as u64))
            }
        })
        .collect();

    cloud.points.reserve(extra);
    for (i, pts) in sampled.into_iter().enumerate() {
        let color = cloud.colors[i];
        for p in pts {
            cloud.points.push(p);
            cloud.source.push(i);
            cloud.colors.push(color);
        }
    }
    Ok(cloud)
}
