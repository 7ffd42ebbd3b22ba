//! Gaussian splat scenes: PLY serialization, SH color conversion, and
//! synthetic fixtures.

mod color;
mod ply;
mod synthetic;

pub use color::{dc_to_rgb, rgb_to_dc, SH_C0};
pub use ply::{parse_splat_ply, read_splat_ply, write_splat_ply, write_splat_ply_file};
pub use synthetic::{grid_scene, make_noisy_sphere};

use nalgebra::{Matrix3, UnitQuaternion, Vector3};

/// Number of higher-order SH coefficients stored per splat (degrees 1..3, 15 per channel).
pub const SH_REST_LEN: usize = 45;

/// One 3D Gaussian, stored as the raw activations found in a 3DGS PLY.
#[derive(Debug, Clone, PartialEq)]
pub struct Splat {
    pub position: [f32; 3],
    /// Natural log of the per-axis standard deviation.
    pub log_scale: [f32; 3],
    /// Quaternion in (w, x, y, z) order, not necessarily normalized.
    pub rotation: [f32; 4],
    pub logit_opacity: f32,
    pub sh_dc: [f32; 3],
    /// Channel-major: the first 15 entries belong to red.
    pub sh_rest: [f32; SH_REST_LEN],
}

impl Default for Splat {
    fn default() -> Self {
        Splat {
            position: [0.0; 3],
            log_scale: [0.0; 3],
            rotation: [1.0, 0.0, 0.0, 0.0],
            logit_opacity: 0.0,
            sh_dc: [0.0; 3],
            sh_rest: [0.0; SH_REST_LEN],
        }
    }
}

impl Splat {
    pub fn center(&self) -> Vector3<f64> {
        Vector3::new(
            self.position[0] as f64,
            self.position[1] as f64,
            self.position[2] as f64,
        )
    }

    pub fn opacity(&self) -> f64 {
        1.0 / (1.0 + (-(self.logit_opacity as f64)).exp())
    }

    /// Per-axis standard deviations.
    pub fn scales(&self) -> Vector3<f64> {
        Vector3::new(
            (self.log_scale[0] as f64).exp(),
            (self.log_scale[1] as f64).exp(),
            (self.log_scale[2] as f64).exp(),
        )
    }

    pub fn unit_rotation(&self) -> UnitQuaternion<f64> {
        let [w, x, y, z] = self.rotation.map(|v| v as f64);
        let q = nalgebra::Quaternion::new(w, x, y, z);
        if q.norm() == 0.0 {
            UnitQuaternion::identity()
        } else {
            UnitQuaternion::from_quaternion(q)
        }
    }

    pub fn rotation_matrix(&self) -> Matrix3<f64> {
        self.unit_rotation().to_rotation_matrix().into_inner()
    }

    /// Linear RGB base color in [0,1].
    pub fn base_color(&self) -> [f64; 3] {
        dc_to_rgb(self.sh_dc.map(|v| v as f64))
    }

    /// Replaces the base color; with `zero_rest` the view-dependent terms are cleared.
    pub fn set_base_color(&mut self, rgb: [f64; 3], zero_rest: bool) {
        self.sh_dc = rgb_to_dc(rgb).map(|v| v as f32);
        if zero_rest {
            self.sh_rest = [0.0; SH_REST_LEN];
        }
    }
}

/// Scalar types that may appear in a PLY vertex element.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalarType {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl ScalarType {
    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "char" | "int8" => ScalarType::I8,
            "uchar" | "uint8" => ScalarType::U8,
            "short" | "int16" => ScalarType::I16,
            "ushort" | "uint16" => ScalarType::U16,
            "int" | "int32" => ScalarType::I32,
            "uint" | "uint32" => ScalarType::U32,
            "float" | "float32" => ScalarType::F32,
            "double" | "float64" => ScalarType::F64,
            _ => return None,
        })
    }

    pub fn size(self) -> usize {
        match self {
            ScalarType::I8 | ScalarType::U8 => 1,
            ScalarType::I16 | ScalarType::U16 => 2,
            ScalarType::I32 | ScalarType::U32 | ScalarType::F32 => 4,
            ScalarType::F64 => 8,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ScalarType::I8 => "char",
            ScalarType::U8 => "uchar",
            ScalarType::I16 => "short",
            ScalarType::U16 => "ushort",
            ScalarType::I32 => "int",
            ScalarType::U32 => "uint",
            ScalarType::F32 => "float",
            ScalarType::F64 => "double",
        }
    }
}

/// Splat attribute a recognized PLY property maps onto.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    Position(u8),
    Dc(u8),
    Rest(u8),
    Opacity,
    Scale(u8),
    Rotation(u8),
}

impl Field {
    pub fn from_name(name: &str) -> Option<Self> {
        let indexed = |prefix: &str, max: usize| -> Option<u8> {
            let idx: usize = name.strip_prefix(prefix)?.parse().ok()?;
            (idx < max).then_some(idx as u8)
        };
        match name {
            "x" => Some(Field::Position(0)),
            "y" => Some(Field::Position(1)),
            "z" => Some(Field::Position(2)),
            "opacity" => Some(Field::Opacity),
            _ => indexed("f_dc_", 3)
                .map(Field::Dc)
                .or_else(|| indexed("f_rest_", SH_REST_LEN).map(Field::Rest))
                .or_else(|| indexed("scale_", 3).map(Field::Scale))
                .or_else(|| indexed("rot_", 4).map(Field::Rotation)),
        }
    }

    pub fn name(self) -> String {
        match self {
            Field::Position(i) => ["x", "y", "z"][i as usize].to_string(),
            Field::Dc(i) => format!("f_dc_{i}"),
            Field::Rest(i) => format!("f_rest_{i}"),
            Field::Opacity => "opacity".to_string(),
            Field::Scale(i) => format!("scale_{i}"),
            Field::Rotation(i) => format!("rot_{i}"),
        }
    }

    fn get(self, s: &Splat) -> f32 {
        match self {
            Field::Position(i) => s.position[i as usize],
            Field::Dc(i) => s.sh_dc[i as usize],
            Field::Rest(i) => s.sh_rest[i as usize],
            Field::Opacity => s.logit_opacity,
            Field::Scale(i) => s.log_scale[i as usize],
            Field::Rotation(i) => s.rotation[i as usize],
        }
    }

    fn set(self, s: &mut Splat, v: f32) {
        match self {
            Field::Position(i) => s.position[i as usize] = v,
            Field::Dc(i) => s.sh_dc[i as usize] = v,
            Field::Rest(i) => s.sh_rest[i as usize] = v,
            Field::Opacity => s.logit_opacity = v,
            Field::Scale(i) => s.log_scale[i as usize] = v,
            Field::Rotation(i) => s.rotation[i as usize] = v,
        }
    }
}

/// Where a vertex property's value lives after parsing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Slot {
    Known(Field),
    /// Unrecognized property, kept as raw bytes at this offset of the per-splat extra record.
    Extra {
        offset: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PropertyDef {
    pub name: String,
    pub ty: ScalarType,
    pub slot: Slot,
}

/// Vertex property order as recorded in (or destined for) a PLY header.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlyLayout {
    pub properties: Vec<PropertyDef>,
    pub comments: Vec<String>,
    /// Bytes of unrecognized properties per splat.
    pub extra_stride: usize,
}

impl PlyLayout {
    /// x,y,z,nx,ny,nz,f_dc_0..2,f_rest_0..44,opacity,scale_0..2,rot_0..3, all float32.
    pub fn standard() -> Self {
        let mut properties = Vec::new();
        let mut known = |f: Field| {
            properties.push(PropertyDef {
                name: f.name(),
                ty: ScalarType::F32,
                slot: Slot::Known(f),
            })
        };
        for i in 0..3 {
            known(Field::Position(i));
        }
        let mut layout_normals = Vec::new();
        for (i, n) in ["nx", "ny", "nz"].iter().enumerate() {
            layout_normals.push(PropertyDef {
                name: n.to_string(),
                ty: ScalarType::F32,
                slot: Slot::Extra { offset: 4 * i },
            });
        }
        let mut tail = Vec::new();
        {
            let mut known = |f: Field| {
                tail.push(PropertyDef {
                    name: f.name(),
                    ty: ScalarType::F32,
                    slot: Slot::Known(f),
                })
            };
            for i in 0..3 {
                known(Field::Dc(i));
            }
            for i in 0..SH_REST_LEN as u8 {
                known(Field::Rest(i));
            }
            known(Field::Opacity);
            for i in 0..3 {
                known(Field::Scale(i));
            }
            for i in 0..4 {
                known(Field::Rotation(i));
            }
        }
        properties.extend(layout_normals);
        properties.extend(tail);
        PlyLayout {
            properties,
            comments: Vec::new(),
            extra_stride: 12,
        }
    }

    pub fn vertex_stride(&self) -> usize {
        self.properties.iter().map(|p| p.ty.size()).sum()
    }
}

/// A full splat scene plus the PLY layout needed to write it back unchanged.
#[derive(Debug, Clone, PartialEq)]
pub struct SplatScene {
    pub splats: Vec<Splat>,
    layout: PlyLayout,
    /// `splats.len() * layout.extra_stride` bytes of unrecognized property values.
    extras: Vec<u8>,
}

impl SplatScene {
    /// Scene with the standard 3DGS property order; normals are written as zeros.
    pub fn new(splats: Vec<Splat>) -> Self {
        let layout = PlyLayout::standard();
        let extras = vec![0; splats.len() * layout.extra_stride];
        SplatScene {
            splats,
            layout,
            extras,
        }
    }

    pub(crate) fn from_parts(splats: Vec<Splat>, layout: PlyLayout, extras: Vec<u8>) -> Self {
        debug_assert_eq!(extras.len(), splats.len() * layout.extra_stride);
        SplatScene {
            splats,
            layout,
            extras,
        }
    }

    pub fn len(&self) -> usize {
        self.splats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.splats.is_empty()
    }

    pub fn layout(&self) -> &PlyLayout {
        &self.layout
    }

    /// Raw bytes of the unrecognized properties of splat `i`.
    pub fn extra_bytes(&self, i: usize) -> &[u8] {
        let stride = self.layout.extra_stride;
        &self.extras[i * stride..(i + 1) * stride]
    }

    pub fn centers(&self) -> Vec<Vector3<f64>> {
        self.splats.iter().map(Splat::center).collect()
    }

    /// New scene holding the given splats (in the given order), extras carried along.
    pub fn select(&self, indices: &[usize]) -> SplatScene {
        let stride = self.layout.extra_stride;
        let mut extras = Vec::with_capacity(indices.len() * stride);
        let splats = indices
            .iter()
            .map(|&i| {
                extras.extend_from_slice(self.extra_bytes(i));
                self.splats[i].clone()
            })
            .collect();
        SplatScene {
            splats,
            layout: self.layout.clone(),
            extras,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_names_round_trip() {
        for p in PlyLayout::standard().properties {
            if let Slot::Known(f) = p.slot {
                assert_eq!(Field::from_name(&p.name), Some(f));
                assert_eq!(f.name(), p.name);
            }
        }
        assert_eq!(Field::from_name("f_rest_45"), None);
        assert_eq!(Field::from_name("nx"), None);
    }

    #[test]
    fn standard_layout_has_62_floats() {
        let layout = PlyLayout::standard();
        assert_eq!(layout.properties.len(), 62);
        assert_eq!(layout.vertex_stride(), 62 * 4);
    }

    #[test]
    fn activations_respect_their_ranges() {
        let mut s = Splat {
            logit_opacity: -30.0,
            log_scale: [-20.0, 0.0, 5.0],
            rotation: [3.0, -1.0, 2.0, 0.5],
            ..Splat::default()
        };
        assert!(s.opacity() > 0.0 && s.opacity() < 1.0);
        assert!(s.scales().iter().all(|&v| v > 0.0));
        assert!((s.unit_rotation().quaternion().norm() - 1.0).abs() < 1e-6);
        s.logit_opacity = 30.0;
        assert!(s.opacity() < 1.0);
    }
}
