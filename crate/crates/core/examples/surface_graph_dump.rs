// Builds the oriented surface graph of a small sphere and prints its bin usage.

use nalgebra::Vector3;
use splatstyle::splat_io::make_noisy_sphere;
use splatstyle::surface_graph::{PcaNormals, SurfaceGraph};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let (scene, _) = make_noisy_sphere(1500, 0, 9);
    let graph =
        SurfaceGraph::from_points(scene.centers(), &PcaNormals::default(), Vector3::z(), 12)?;

    let dump = graph.dump();
    let mut per_bin = [0usize; 9];
    for node in &dump.bins {
        for &(bin, _) in node {
            per_bin[bin as usize] += 1;
        }
    }
    let outward = graph
        .normals()
        .iter()
        .zip(&graph.positions)
        .filter(|(n, p)| n.dot(p) > 0.0)
        .count();
    println!(
        "{} nodes, {} edges, mean spacing {:.4}, {outward} normals point outward",
        graph.node_count(),
        graph.edge_count(),
        graph.mean_spacing()
    );
    println!("selection entries per bin: {per_bin:?}");
    let json = serde_json::to_string(&dump)?;
    println!("dump is {} bytes of JSON", json.len());
    if per_bin.contains(&0) {
        return Err("some bin is never selected".into());
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
