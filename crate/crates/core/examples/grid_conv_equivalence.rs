// On a pixel grid the graph convolution is an ordinary 3x3 convolution. This
// example checks one random layer against a direct stencil.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use splatstyle::conv_engine::{
    build_dir_matrices, selection_conv, ConvWeights, FeatureMap, LayerKind, LayerSpec,
    NetworkManifest, WeightStore,
};
use splatstyle::surface_graph::grid_graph;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let (h, w, cin, cout) = (24, 32, 2, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let kernel: Vec<f32> = (0..cout * cin * 9)
        .map(|_| rng.gen_range(-1.0..1.0))
        .collect();
    let bias: Vec<f32> = (0..cout).map(|_| rng.gen_range(-0.1..0.1)).collect();
    let image: Vec<f32> = (0..h * w * cin).map(|_| rng.gen_range(0.0..1.0)).collect();

    let manifest = NetworkManifest::new(vec![LayerSpec::new("c", LayerKind::Conv, cin, cout)])?;
    // Tensors are filled from the image-layout kernel below.
    let mut store = WeightStore {
        manifest,
        tensors: Default::default(),
    };
    store.insert_image_kernel("c", &kernel, cin, cout, &bias)?;
    let taps = std::array::from_fn(|m| store.get(&format!("c.w{m}")).ok().map(|t| t.data.clone()));
    let weights = ConvWeights::new(cin, cout, taps, bias.clone())?;

    let graph = grid_graph(h, w)?;
    let dirs = build_dir_matrices(&graph);
    let got = selection_conv(
        &FeatureMap::new(h * w, cin, image.clone())?,
        &dirs,
        &weights,
    )?;

    let mut worst = 0.0f32;
    for r in 0..h {
        for c in 0..w {
            for o in 0..cout {
                let mut acc = bias[o];
                for ky in 0..3 {
                    for kx in 0..3 {
                        let (rr, cc) = (r as isize + ky as isize - 1, c as isize + kx as isize - 1);
                        if rr < 0 || cc < 0 || rr >= h as isize || cc >= w as isize {
                            continue;
                        }
                        let p = rr as usize * w + cc as usize;
                        for i in 0..cin {
                            acc += kernel[(o * cin + i) * 9 + ky * 3 + kx] * image[p * cin + i];
                        }
                    }
                }
                worst = worst.max((got.row(r * w + c)[o] - acc).abs());
            }
        }
    }
    println!(
        "{h}x{w} grid, {} edges, max deviation from stencil {worst:.2e}",
        graph.edge_count()
    );
    if worst > 1e-4 {
        return Err(format!("deviation {worst}").into());
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
