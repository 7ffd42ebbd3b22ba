use std::io::Write;
use std::path::Path;

use super::{Field, PlyLayout, PropertyDef, ScalarType, Slot, Splat, SplatScene};
use crate::error::{Error, ParseErrorKind, Result};

const END_HEADER: &[u8] = b"end_header";

const REQUIRED: [&str; 14] = [
    "x", "y", "z", "f_dc_0", "f_dc_1", "f_dc_2", "opacity", "scale_0", "scale_1", "scale_2",
    "rot_0", "rot_1", "rot_2", "rot_3",
];

struct Header {
    layout: PlyLayout,
    vertex_count: usize,
    payload_start: usize,
}

fn find_header_end(bytes: &[u8]) -> Result<usize> {
    let mut line_start = 0;
    for (i, &b) in bytes.iter().enumerate() {
        if b == b'\n' {
            let line = &bytes[line_start..i];
            let line = line.strip_suffix(b"\r").unwrap_or(line);
            if line == END_HEADER {
                return Ok(i + 1);
            }
            line_start = i + 1;
        }
    }
    Err(Error::header("missing end_header"))
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    if !bytes.starts_with(b"ply") {
        return Err(Error::header("missing `ply` magic"));
    }
    let payload_start = find_header_end(bytes)?;
    let text = std::str::from_utf8(&bytes[..payload_start])
        .map_err(|_| Error::header("header is not valid UTF-8"))?;

    let mut lines = text.lines().map(|l| l.trim_end_matches('\r'));
    if lines.next() != Some("ply") {
        return Err(Error::header("first line must be `ply`"));
    }

    let mut format_seen = false;
    let mut vertex_count = None;
    let mut in_vertex = false;
    let mut comments = Vec::new();
    let mut properties: Vec<PropertyDef> = Vec::new();
    let mut extra_stride = 0;

    for line in lines {
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            None => continue,
            Some("end_header") => break,
            Some("comment") | Some("obj_info") => {
                comments.push(line.trim_start().to_string());
            }
            Some("format") => {
                let encoding = tokens.next().unwrap_or("");
                match encoding {
                    "binary_little_endian" => {}
                    "ascii" | "binary_big_endian" => {
                        return Err(Error::Parse(ParseErrorKind::UnsupportedEncoding(
                            encoding.to_string(),
                        )))
                    }
                    other => return Err(Error::header(format!("unknown format `{other}`"))),
                }
                if tokens.next() != Some("1.0") {
                    return Err(Error::header("only PLY version 1.0 is supported"));
                }
                format_seen = true;
            }
            Some("element") => {
                let name = tokens.next().unwrap_or("");
                let count: usize = tokens
                    .next()
                    .and_then(|c| c.parse().ok())
                    .ok_or_else(|| Error::header(format!("bad element count for `{name}`")))?;
                if name != "vertex" {
                    return Err(Error::header(format!("unsupported element `{name}`")));
                }
                if vertex_count.is_some() {
                    return Err(Error::header("duplicate vertex element"));
                }
                vertex_count = Some(count);
                in_vertex = true;
            }
            Some("property") => {
                if !in_vertex {
                    return Err(Error::header("property outside of an element"));
                }
                let ty_name = tokens.next().unwrap_or("");
                if ty_name == "list" {
                    return Err(Error::header(
                        "list properties are not supported on vertices",
                    ));
                }
                let ty = ScalarType::from_name(ty_name)
                    .ok_or_else(|| Error::header(format!("unknown property type `{ty_name}`")))?;
                let name = tokens
                    .next()
                    .ok_or_else(|| Error::header("property without a name"))?
                    .to_string();
                if properties.iter().any(|p| p.name == name) {
                    return Err(Error::header(format!("duplicate property `{name}`")));
                }
                let slot = match Field::from_name(&name) {
                    Some(field) => {
                        if ty != ScalarType::F32 {
                            return Err(Error::header(format!(
                                "property `{name}` must be float, found {ty_name}"
                            )));
                        }
                        Slot::Known(field)
                    }
                    None => {
                        let offset = extra_stride;
                        extra_stride += ty.size();
                        Slot::Extra { offset }
                    }
                };
                properties.push(PropertyDef { name, ty, slot });
            }
            Some(other) => return Err(Error::header(format!("unexpected keyword `{other}`"))),
        }
    }

    if !format_seen {
        return Err(Error::header("missing format line"));
    }
    let vertex_count = vertex_count.ok_or_else(|| Error::header("missing vertex element"))?;
    for req in REQUIRED {
        if !properties.iter().any(|p| p.name == req) {
            return Err(Error::header(format!("missing required property `{req}`")));
        }
    }

    Ok(Header {
        layout: PlyLayout {
            properties,
            comments,
            extra_stride,
        },
        vertex_count,
        payload_start,
    })
}

/// Parses a binary little-endian 3DGS PLY.
///
/// Missing `f_rest_*` coefficients read as zero. Properties the splat model does not
/// know about (normals, custom attributes) are kept as raw bytes and written back
/// by [`write_splat_ply`].
pub fn parse_splat_ply(bytes: &[u8]) -> Result<SplatScene> {
    let header = parse_header(bytes)?;
    let layout = header.layout;
    let stride = layout.vertex_stride();
    let payload = &bytes[header.payload_start..];
    let expected = header.vertex_count * stride;
    if payload.len() < expected {
        return Err(Error::Parse(ParseErrorKind::Truncated {
            expected,
            actual: payload.len(),
        }));
    }
    if header.vertex_count == 0 {
        return Err(Error::header("vertex element is empty"));
    }

    let mut splats = Vec::with_capacity(header.vertex_count);
    let mut extras = Vec::with_capacity(header.vertex_count * layout.extra_stride);
    for record in payload[..expected].chunks_exact(stride) {
        let mut splat = Splat::default();
        let mut cursor = 0;
        for prop in &layout.properties {
            let size = prop.ty.size();
            let raw = &record[cursor..cursor + size];
            match prop.slot {
                Slot::Known(field) => {
                    field.set(&mut splat, f32::from_le_bytes(raw.try_into().unwrap()))
                }
                Slot::Extra { .. } => extras.extend_from_slice(raw),
            }
            cursor += size;
        }
        splats.push(splat);
    }
    Ok(SplatScene::from_parts(splats, layout, extras))
}

pub fn read_splat_ply(path: impl AsRef<Path>) -> Result<SplatScene> {
    parse_splat_ply(&std::fs::read(path)?)
}

/// Serializes a scene as binary little-endian PLY in the scene's recorded property order.
pub fn write_splat_ply(scene: &SplatScene) -> Result<Vec<u8>> {
    if scene.is_empty() {
        return Err(Error::EmptyScene);
    }
    let layout = scene.layout();
    let mut out = Vec::with_capacity(1024 + scene.len() * layout.vertex_stride());
    writeln!(out, "ply")?;
    writeln!(out, "format binary_little_endian 1.0")?;
    for c in &layout.comments {
        writeln!(out, "{c}")?;
    }
    writeln!(out, "element vertex {}", scene.len())?;
    for p in &layout.properties {
        writeln!(out, "property {} {}", p.ty.name(), p.name)?;
    }
    writeln!(out, "end_header")?;

    for (i, splat) in scene.splats.iter().enumerate() {
        let extra = scene.extra_bytes(i);
        for p in &layout.properties {
            match p.slot {
                Slot::Known(field) => out.extend_from_slice(&field.get(splat).to_le_bytes()),
                Slot::Extra { offset } => {
                    out.extend_from_slice(&extra[offset..offset + p.ty.size()])
                }
            }
        }
    }
    Ok(out)
}

/// Writes atomically: the bytes go to a temporary sibling which is then renamed over `path`.
pub fn write_splat_ply_file(scene: &SplatScene, path: impl AsRef<Path>) -> Result<()> {
    let bytes = write_splat_ply(scene)?;
    crate::util::write_atomic(path.as_ref(), &bytes)
}
