use rand::Rng;

use super::{Splat, SplatScene};
use crate::util::stream_rng;

/// Unit-sphere surface splats on a Fibonacci lattice plus uniform noise in `[-1, 1]^3`.
///
/// Returns the scene and a per-splat flag that is `true` for the noise splats, which
/// follow the `n_surface` surface splats.
pub fn make_noisy_sphere(n_surface: usize, n_noise: usize, seed: u64) -> (SplatScene, Vec<bool>) {
    assert!(n_surface >= 1, "sphere needs at least one surface splat");
    let golden_angle = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    let spacing = (4.0 * std::f64::consts::PI / n_surface as f64).sqrt();
    let log_scale = (0.5 * spacing).ln() as f32;

    let mut splats = Vec::with_capacity(n_surface + n_noise);
    for i in 0..n_surface {
        let z = 1.0 - (2.0 * i as f64 + 1.0) / n_surface as f64;
        let r = (1.0 - z * z).max(0.0).sqrt();
        let phi = golden_angle * i as f64;
        let p = [r * phi.cos(), r * phi.sin(), z];
        let mut s = Splat {
            position: p.map(|v| v as f32),
            log_scale: [log_scale; 3],
            logit_opacity: 10.0,
            ..Splat::default()
        };
        s.set_base_color(p.map(|v| 0.5 * (v + 1.0)), true);
        splats.push(s);
    }

    let mut rng = stream_rng(seed, 0x5eed_0fc0_ffee);
    for _ in 0..n_noise {
        let p: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-1.0..=1.0));
        let rgb: [f64; 3] = std::array::from_fn(|_| rng.gen_range(0.0..=1.0));
        let mut s = Splat {
            position: p.map(|v| v as f32),
            log_scale: [log_scale; 3],
            logit_opacity: 10.0,
            ..Splat::default()
        };
        s.set_base_color(rgb, true);
        splats.push(s);
    }

    let mut truth = vec![false; n_surface];
    truth.resize(n_surface + n_noise, true);
    (SplatScene::new(splats), truth)
}

/// Planar scene with one splat per pixel at `(col, row, 0)`, row-major.
pub fn grid_scene(
    height: usize,
    width: usize,
    rgb: impl Fn(usize, usize) -> [f64; 3],
) -> SplatScene {
    let mut splats = Vec::with_capacity(height * width);
    for row in 0..height {
        for col in 0..width {
            let mut s = Splat {
                position: [col as f32, row as f32, 0.0],
                log_scale: [(0.5f32).ln(), (0.5f32).ln(), (0.05f32).ln()],
                logit_opacity: 10.0,
                ..Splat::default()
            };
            s.set_base_color(rgb(row, col), true);
            splats.push(s);
        }
    }
    SplatScene::new(splats)
}
