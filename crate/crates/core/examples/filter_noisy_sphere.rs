// Removes floaters from a noisy sphere by neighbourhood offset and reports how
// many of the injected noise splats were caught.

use splatstyle::preprocess::filter_by_percentile;
use splatstyle::splat_io::make_noisy_sphere;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let (scene, is_noise) = make_noisy_sphere(4000, 400, 7);
    let percentile = 400.0 / scene.len() as f64;
    let (kept, report) = filter_by_percentile(&scene, 16, percentile)?;

    let caught = report.removed.iter().filter(|&&i| is_noise[i]).count();
    let diag = report.diagnostics(10);
    println!(
        "{} splats -> {} kept, threshold {:.4}, noise caught {caught}/400",
        scene.len(),
        kept.len(),
        report.threshold
    );
    for (w, count) in diag.histogram_edges.windows(2).zip(&diag.histogram_counts) {
        println!("  [{:.3}, {:.3}) {count}", w[0], w[1]);
    }
    if caught < 360 {
        return Err(format!("only {caught} of 400 noise splats removed").into());
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
