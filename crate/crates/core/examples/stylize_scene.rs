// Stylizes a synthetic sphere with a procedural checker image, in memory. The
// untrained network shows the plumbing, not a pleasing result.

use splatstyle::conv_engine::{Network, NetworkManifest, WeightStore};
use splatstyle::pipeline::{stylize_scene, StyleOptions};
use splatstyle::splat_io::make_noisy_sphere;
use splatstyle::stylizer::StyleImage;

fn mean(colors: impl Iterator<Item = [f64; 3]>) -> [f64; 3] {
    let mut sum = [0.0; 3];
    let mut n = 0.0;
    for c in colors {
        (0..3).for_each(|k| sum[k] += c[k]);
        n += 1.0;
    }
    sum.map(|s| s / n)
}

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let (scene, _) = make_noisy_sphere(3000, 60, 3);
    let style = StyleImage::from_fn(64, 64, |r, c| {
        if (r / 8 + c / 8) % 2 == 0 {
            [0.9, 0.6, 0.1]
        } else {
            [0.1, 0.2, 0.7]
        }
    })?;
    let store = WeightStore::random(NetworkManifest::encoder_decoder(&[8, 16])?, 1)?;
    let network = Network::new(&store)?;
    let options = StyleOptions {
        filter_percentile: 0.02,
        samples: 1500,
        ..Default::default()
    };
    let out = stylize_scene(&scene, &style, &network, &options)?;

    let t = &out.timing;
    println!(
        "{} splats in, {} out; graph {} nodes, {} edges; preprocess {:.2} s, stylize {:.2} s",
        t.splats_in, t.splats_out, t.nodes, t.edges, t.preprocess_s, t.stylize_s
    );
    println!(
        "mean color before {:.3?}",
        mean(scene.splats.iter().map(|s| s.base_color()))
    );
    println!(
        "mean color after  {:.3?}",
        mean(out.scene.splats.iter().map(|s| s.base_color()))
    );
    println!(
        "depth along normals: mean {:.3}, flagged edges {}",
        out.diagnostics.depth.mean_normal_fraction, out.diagnostics.depth.flagged_edges
    );
    if t.splats_out != scene.len() - 62 || t.nodes != t.splats_out + 1500 {
        return Err("unexpected splat or node count".into());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}
