// Runs the two ablations from files: random normals instead of PCA normals, and
// graph construction from splat centers only.

use splatstyle::conv_engine::{NetworkManifest, WeightStore};
use splatstyle::pipeline::{report_ablation, run, Ablation, RunConfig};
use splatstyle::splat_io::{make_noisy_sphere, read_splat_ply, write_splat_ply_file};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let (scene, _) = make_noisy_sphere(2000, 0, 5);
    write_splat_ply_file(&scene, dir.path().join("in.ply"))?;
    image::RgbImage::from_fn(48, 48, |x, y| {
        image::Rgb([(x * 5) as u8, 40, (y * 5) as u8])
    })
    .save(dir.path().join("style.png"))?;
    WeightStore::random(NetworkManifest::encoder_decoder(&[8, 8])?, 2)?
        .write(dir.path().join("w.bin"))?;

    let mut config = RunConfig::new(
        dir.path().join("in.ply"),
        dir.path().join("style.png"),
        dir.path().join("out.ply"),
        dir.path().join("w.bin"),
    );
    config.options.samples = 2000;

    let full = run(&config)?;
    let reference = read_splat_ply(&config.output)?;
    println!("full pipeline: {} nodes", full.nodes);
    for mode in [Ablation::RandomNormals, Ablation::NoSampling] {
        let t = report_ablation(&config, mode)?;
        let out = read_splat_ply(&config.output)?;
        let changed = out
            .splats
            .iter()
            .zip(&reference.splats)
            .filter(|(a, b)| a.sh_dc != b.sh_dc)
            .count();
        println!(
            "{mode:?}: {} nodes, {changed}/{} splats colored differently, {:.2} s",
            t.nodes,
            out.len(),
            t.total_s
        );
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
