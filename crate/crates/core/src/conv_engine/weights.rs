//! Weight container shared with the checkpoint exporter.
//!
//! Byte layout, all integers little-endian:
//!
//! ```text
//! [0..8)        u64 H: length of the JSON header in bytes
//! [8..8+H)      UTF-8 JSON header
//! [8+H..)       blob: float32 little-endian tensors, row-major
//! ```
//!
//! The header is
//!
//! ```json
//! {
//!   "format": "splatstyle-weights",
//!   "version": 1,
//!   "layers": [{"name": "conv1", "kind": "conv", "in_channels": 3, "out_channels": 64}, ...],
//!   "tensors": {"conv1.w0": {"offset": 0, "shape": [3, 64]}, ...}
//! }
//! ```
//!
//! `offset` is in bytes from the start of the blob. A `conv` layer named `L` owns
//! `L.w0` .. `L.w8`, each `[in_channels, out_channels]`, and `L.bias` of shape
//! `[out_channels]`; a `conv1x1` layer owns only `L.w0` and `L.bias`.
//!
//! `W_m` multiplies features gathered from direction bin `m`. For an image kernel
//! `K[out][in][ky][kx]` applied as cross-correlation, the block entries are
//! `W_m[in][out] = K[out][in][ky][kx]` with bins and taps paired as
//!
//! ```text
//!   (ky,kx): (0,0) (0,1) (0,2)      bin:  8  1  2
//!            (1,0) (1,1) (1,2)            7  0  3
//!            (2,0) (2,1) (2,2)            6  5  4
//! ```
//!
//! so bin 1 reads the pixel above, bin 3 the pixel to the right, and bin 0 the
//! center. Writers emit tensors in ascending name order, offsets packed without gaps.

use std::collections::BTreeMap;
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::manifest::{bias_name, weight_name, LayerKind, LayerSpec, NetworkManifest};
use crate::error::{Error, Result};
use crate::surface_graph::NUM_BINS;
use crate::util::stream_rng;

pub const FORMAT_TAG: &str = "splatstyle-weights";
pub const FORMAT_VERSION: u32 = 1;

/// Bin receiving kernel tap `(ky, kx)` of a 3x3 cross-correlation kernel.
pub const TAP_TO_BIN: [[usize; 3]; 3] = [[8, 1, 2], [7, 0, 3], [6, 5, 4]];

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f32>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f32>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(Error::Shape(format!(
                "tensor of shape {shape:?} needs {expected} values, got {}",
                data.len()
            )));
        }
        Ok(Tensor { shape, data })
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct TensorEntry {
    offset: usize,
    shape: Vec<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
    layers: Vec<LayerSpec>,
    tensors: BTreeMap<String, TensorEntry>,
}

/// Manifest plus named float tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightStore {
    pub manifest: NetworkManifest,
    pub tensors: BTreeMap<String, Tensor>,
}

impl WeightStore {
    pub fn new(manifest: NetworkManifest, tensors: BTreeMap<String, Tensor>) -> Result<Self> {
        let store = WeightStore { manifest, tensors };
        store.validate()?;
        Ok(store)
    }

    /// Every conv layer resolves all of its tensors with the declared shapes.
    pub fn validate(&self) -> Result<()> {
        self.manifest.validate()?;
        for layer in &self.manifest.layers {
            for name in layer.tensor_names() {
                let t = self
                    .tensors
                    .get(&name)
                    .ok_or_else(|| Error::Weight(format!("missing tensor `{name}`")))?;
                let expected = if name.ends_with(".bias") {
                    vec![layer.out_channels]
                } else {
                    vec![layer.in_channels, layer.out_channels]
                };
                if t.shape != expected {
                    return Err(Error::Weight(format!(
                        "tensor `{name}` has shape {:?}, layer `{}` needs {expected:?}",
                        t.shape, layer.name
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<&Tensor> {
        self.tensors
            .get(name)
            .ok_or_else(|| Error::Weight(format!("missing tensor `{name}`")))
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut offset = 0;
        let mut entries = BTreeMap::new();
        for (name, t) in &self.tensors {
            entries.insert(
                name.clone(),
                TensorEntry {
                    offset,
                    shape: t.shape.clone(),
                },
            );
            offset += 4 * t.data.len();
        }
        let header = Header {
            format: FORMAT_TAG.to_string(),
            version: FORMAT_VERSION,
            layers: self.manifest.layers.clone(),
            tensors: entries,
        };
        let json = serde_json::to_vec(&header)?;
        let mut out = Vec::with_capacity(8 + json.len() + offset);
        out.extend_from_slice(&(json.len() as u64).to_le_bytes());
        out.extend_from_slice(&json);
        for t in self.tensors.values() {
            for v in &t.data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let len_bytes: [u8; 8] = bytes
            .get(..8)
            .and_then(|b| b.try_into().ok())
            .ok_or_else(|| Error::Weight("file shorter than its length prefix".into()))?;
        let header_len = u64::from_le_bytes(len_bytes) as usize;
        let header_end = 8usize
            .checked_add(header_len)
            .filter(|&e| e <= bytes.len())
            .ok_or_else(|| Error::Weight("header extends past end of file".into()))?;
        let header: Header = serde_json::from_slice(&bytes[8..header_end])?;
        if header.format != FORMAT_TAG {
            return Err(Error::Weight(format!(
                "unknown container format `{}`",
                header.format
            )));
        }
        if header.version != FORMAT_VERSION {
            return Err(Error::Weight(format!(
                "unsupported version {}",
                header.version
            )));
        }
        let blob = &bytes[header_end..];
        let mut tensors = BTreeMap::new();
        for (name, entry) in header.tensors {
            let count: usize = entry.shape.iter().product();
            let end = entry.offset + 4 * count;
            if entry.offset % 4 != 0 || end > blob.len() {
                return Err(Error::Weight(format!(
                    "tensor `{name}` at byte {} (+{}) lies outside the {}-byte blob",
                    entry.offset,
                    4 * count,
                    blob.len()
                )));
            }
            let data = blob[entry.offset..end]
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                .collect();
            tensors.insert(
                name,
                Tensor {
                    shape: entry.shape,
                    data,
                },
            );
        }
        WeightStore::new(
            NetworkManifest {
                layers: header.layers,
            },
            tensors,
        )
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        WeightStore::from_bytes(&std::fs::read(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        crate::util::write_atomic(path.as_ref(), &self.to_bytes()?)
    }

    /// Stores a 3x3 image kernel as the blocks of a conv layer. `kernel` is row-major
    /// with shape `[out_channels, in_channels, 3, 3]`.
    pub fn insert_image_kernel(
        &mut self,
        layer: &str,
        kernel: &[f32],
        in_channels: usize,
        out_channels: usize,
        bias: &[f32],
    ) -> Result<()> {
        let (cin, cout) = (in_channels, out_channels);
        if kernel.len() != cout * cin * 9 {
            return Err(Error::Shape(format!(
                "kernel has {} values, expected {cout}x{cin}x3x3",
                kernel.len()
            )));
        }
        for ky in 0..3 {
            for kx in 0..3 {
                let mut w = vec![0.0; cin * cout];
                for o in 0..cout {
                    for i in 0..cin {
                        w[i * cout + o] = kernel[((o * cin + i) * 3 + ky) * 3 + kx];
                    }
                }
                self.tensors.insert(
                    weight_name(layer, TAP_TO_BIN[ky][kx]),
                    Tensor::new(vec![cin, cout], w)?,
                );
            }
        }
        self.tensors
            .insert(bias_name(layer), Tensor::new(vec![cout], bias.to_vec())?);
        Ok(())
    }

    /// `conv1x1` identity, transform slot, `conv1x1` identity.
    pub fn identity_bundle(channels: usize) -> Result<Self> {
        let manifest = NetworkManifest::new(vec![
            LayerSpec::new("encode", LayerKind::Conv1x1, channels, channels),
            LayerSpec::new("transform", LayerKind::Transform, channels, channels),
            LayerSpec::new("decode", LayerKind::Conv1x1, channels, channels),
        ])?;
        let mut eye = vec![0.0; channels * channels];
        for c in 0..channels {
            eye[c * channels + c] = 1.0;
        }
        let mut tensors = BTreeMap::new();
        for layer in ["encode", "decode"] {
            tensors.insert(
                weight_name(layer, 0),
                Tensor::new(vec![channels, channels], eye.clone())?,
            );
            tensors.insert(
                bias_name(layer),
                Tensor::new(vec![channels], vec![0.0; channels])?,
            );
        }
        WeightStore::new(manifest, tensors)
    }

    /// He-initialized weights for every conv layer of `manifest`, seeded per layer.
    pub fn random(manifest: NetworkManifest, seed: u64) -> Result<Self> {
        let mut tensors = BTreeMap::new();
        for (l, layer) in manifest.layers.iter().enumerate() {
            let (cin, cout) = (layer.in_channels, layer.out_channels);
            let taps = match layer.kind {
                LayerKind::Conv => NUM_BINS,
                LayerKind::Conv1x1 => 1,
                _ => continue,
            };
            let std = (2.0 / (taps * cin) as f64).sqrt();
            let mut rng = stream_rng(seed, l as u64);
            for m in 0..taps {
                let data = (0..cin * cout)
                    .map(|_| (std * rng.sample::<f64, _>(StandardNormal)) as f32)
                    .collect();
                tensors.insert(
                    weight_name(&layer.name, m),
                    Tensor::new(vec![cin, cout], data)?,
                );
            }
            let bias = (0..cout).map(|_| rng.gen_range(-0.05..0.05)).collect();
            tensors.insert(bias_name(&layer.name), Tensor::new(vec![cout], bias)?);
        }
        WeightStore::new(manifest, tensors)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn container_round_trip_is_exact() {
        let m = NetworkManifest::encoder_decoder(&[4, 8]).unwrap();
        let store = WeightStore::random(m, 3).unwrap();
        let bytes = store.to_bytes().unwrap();
        assert_eq!(WeightStore::from_bytes(&bytes).unwrap(), store);
        assert_eq!(store.to_bytes().unwrap(), bytes);
    }

    #[test]
    fn declared_offsets_address_every_tensor() {
        let store = WeightStore::identity_bundle(3).unwrap();
        let bytes = store.to_bytes().unwrap();
        let hlen = u64::from_le_bytes(bytes[..8].try_into().unwrap()) as usize;
        let header: serde_json::Value = serde_json::from_slice(&bytes[8..8 + hlen]).unwrap();
        assert_eq!(header["format"], FORMAT_TAG);
        let blob = &bytes[8 + hlen..];
        for (name, entry) in header["tensors"].as_object().unwrap() {
            let off = entry["offset"].as_u64().unwrap() as usize;
            let t = &store.tensors[name];
            let first = f32::from_le_bytes(blob[off..off + 4].try_into().unwrap());
            assert_eq!(first, t.data[0], "{name}");
        }
    }

    #[test]
    fn identity_bundle_is_deterministic() {
        let a = WeightStore::identity_bundle(3).unwrap().to_bytes().unwrap();
        let b = WeightStore::identity_bundle(3).unwrap().to_bytes().unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn missing_or_misshapen_tensors_are_rejected() {
        let mut store = WeightStore::identity_bundle(3).unwrap();
        store.tensors.remove("decode.bias");
        assert!(matches!(store.validate(), Err(Error::Weight(_))));

        let mut store = WeightStore::identity_bundle(3).unwrap();
        store.tensors.insert(
            "encode.w0".into(),
            Tensor::new(vec![3, 2], vec![0.0; 6]).unwrap(),
        );
        assert!(matches!(store.validate(), Err(Error::Weight(_))));
    }

    #[test]
    fn corrupt_containers_are_rejected() {
        let bytes = WeightStore::identity_bundle(3).unwrap().to_bytes().unwrap();
        assert!(WeightStore::from_bytes(&bytes[..4]).is_err());
        assert!(WeightStore::from_bytes(&bytes[..bytes.len() - 4]).is_err());
        let mut bad = bytes.clone();
        bad[..8].copy_from_slice(&(1u64 << 40).to_le_bytes());
        assert!(WeightStore::from_bytes(&bad).is_err());
    }

    #[test]
    fn center_tap_kernel_is_identity_block() {
        let mut store = WeightStore::identity_bundle(1).unwrap();
        let mut kernel = [0.0f32; 9];
        kernel[4] = 1.0;
        store
            .insert_image_kernel("c", &kernel, 1, 1, &[0.0])
            .unwrap();
        assert_eq!(store.tensors["c.w0"].data, vec![1.0]);
        for m in 1..9 {
            assert_eq!(store.tensors[&format!("c.w{m}")].data, vec![0.0]);
        }
    }
}
