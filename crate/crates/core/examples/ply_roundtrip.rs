// Parses a hand-built PLY with a custom `uchar label` property and no SH rest
// coefficients, recolors it and checks the untouched bytes survive re-writing.

use splatstyle::splat_io::{parse_splat_ply, write_splat_ply};

const PROPS: [&str; 14] = [
    "x", "y", "z", "f_dc_0", "f_dc_1", "f_dc_2", "opacity", "scale_0", "scale_1", "scale_2",
    "rot_0", "rot_1", "rot_2", "rot_3",
];

fn handmade_ply(n: usize) -> Vec<u8> {
    let mut header =
        format!("ply\nformat binary_little_endian 1.0\ncomment made by hand\nelement vertex {n}\n");
    for (i, p) in PROPS.iter().enumerate() {
        header += &format!("property float {p}\n");
        if i == 2 {
            header += "property uchar label\n";
        }
    }
    header += "end_header\n";
    let mut bytes = header.into_bytes();
    for v in 0..n {
        for (i, p) in PROPS.iter().enumerate() {
            let value = match *p {
                "rot_0" => 1.0,
                "scale_0" | "scale_1" | "scale_2" => -3.0,
                _ => (v * 14 + i) as f32 * 0.01,
            };
            bytes.extend_from_slice(&value.to_le_bytes());
            if i == 2 {
                bytes.push((v % 256) as u8);
            }
        }
    }
    bytes
}

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let original = handmade_ply(50);
    let mut scene = parse_splat_ply(&original)?;
    println!(
        "parsed {} splats with {} properties",
        scene.len(),
        scene.layout().properties.len()
    );

    let rewritten = write_splat_ply(&scene)?;
    if rewritten != original {
        return Err("unmodified scene did not round-trip byte-for-byte".into());
    }

    for splat in &mut scene.splats {
        splat.set_base_color([0.9, 0.2, 0.1], true);
    }
    let recolored = parse_splat_ply(&write_splat_ply(&scene)?)?;
    for i in 0..recolored.len() {
        if recolored.extra_bytes(i) != [(i % 256) as u8] {
            return Err(format!("label of splat {i} changed").into());
        }
        let rgb = recolored.splats[i].base_color();
        if (rgb[0] - 0.9).abs() > 1e-5 {
            return Err(format!("color of splat {i} is {rgb:?}").into());
        }
    }
    println!(
        "recolored scene keeps labels and header comments: {:?}",
        recolored.layout().comments
    );
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}
