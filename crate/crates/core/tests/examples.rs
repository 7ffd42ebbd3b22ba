mod filter_noisy_sphere {
    #![allow(dead_code)]
    include!(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/examples/filter_noisy_sphere.rs"
    ));
}

#[test]
fn filter_noisy_sphere_example_runs() {
    filter_noisy_sphere::run_example().expect("filter_noisy_sphere example should run");
}

mod grid_conv_equivalence {
    #![allow(dead_code)]
    include!(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/examples/grid_conv_equivalence.rs"
    ));
}

#[test]
fn grid_conv_equivalence_example_runs() {
    grid_conv_equivalence::run_example().expect("grid_conv_equivalence example should run");
}

mod stylize_scene {
    #![allow(dead_code)]
    include!(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/examples/stylize_scene.rs"
    ));
}

#[test]
fn stylize_scene_example_runs() {
    stylize_scene::run_example().expect("stylize_scene example should run");
}

mod ply_roundtrip {
    #![allow(dead_code)]
    include!(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/examples/ply_roundtrip.rs"
    ));
}

#[test]
fn ply_roundtrip_example_runs() {
    ply_roundtrip::run_example().expect("ply_roundtrip example should run");
}

mod ablation {
    #![allow(dead_code)]
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/ablation.rs"));
}

#[test]
fn ablation_example_runs() {
    ablation::run_example().expect("ablation example should run");
}

mod weights_container {
    #![allow(dead_code)]
    include!(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/examples/weights_container.rs"
    ));
}

#[test]
fn weights_container_example_runs() {
    weights_container::run_example().expect("weights_container example should run");
}

mod surface_graph_dump {
    #![allow(dead_code)]
    include!(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/examples/surface_graph_dump.rs"
    ));
}

#[test]
fn surface_graph_dump_example_runs() {
    surface_graph_dump::run_example().expect("surface_graph_dump example should run");
}
