// Writes weight containers usable with the `splatstyle` binary.
//
// `cargo run --example weights_container -- out_dir` leaves `identity.bin` (color
// statistics transfer only) and `random.bin` (a small untrained encoder/decoder).

use std::path::Path;

use splatstyle::conv_engine::{Network, NetworkManifest, WeightStore};

pub fn write_bundles(dir: &Path) -> Result<(), Box<dyn std::error::Error>> {
    std::fs::create_dir_all(dir)?;
    let identity = WeightStore::identity_bundle(3)?;
    let random = WeightStore::random(NetworkManifest::encoder_decoder(&[16, 32])?, 0)?;
    for (name, store) in [("identity.bin", &identity), ("random.bin", &random)] {
        let path = dir.join(name);
        store.write(&path)?;
        let back = WeightStore::read(&path)?;
        if back.manifest != store.manifest || back.tensors != store.tensors {
            return Err(format!("{} did not read back", path.display()).into());
        }
        let net = Network::new(&back)?;
        println!(
            "{}: {} layers, {} tensors, pool factor {}",
            path.display(),
            net.manifest().layers.len(),
            back.tensors.len(),
            net.manifest().encoder_pool_factor()
        );
    }
    Ok(())
}

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    write_bundles(dir.path())
}

#[allow(dead_code)]
fn main() {
    let result = match std::env::args().nth(1) {
        Some(dir) => write_bundles(Path::new(&dir)),
        None => run_example(),
    };
    if let Err(e) = result {
        eprintln!("{e}");
        std::process::exit(1);
    }
}
