use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayerKind {
    /// 3x3 selection convolution: weights `W_0..W_8` and a bias.
    Conv,
    /// Bin-0 only convolution.
    Conv1x1,
    Relu,
    /// Halve the resolution: 2x2 pixel blocks on grids, voxel clustering elsewhere.
    Pool,
    /// Copy coarse features back onto the members of the matching pool.
    Unpool,
    /// Slot for the style feature transform.
    Transform,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub name: String,
    pub kind: LayerKind,
    pub in_channels: usize,
    pub out_channels: usize,
}

impl LayerSpec {
    pub fn new(
        name: impl Into<String>,
        kind: LayerKind,
        in_channels: usize,
        out_channels: usize,
    ) -> Self {
        LayerSpec {
            name: name.into(),
            kind,
            in_channels,
            out_channels,
        }
    }

    /// Tensor names a layer of this kind needs.
    pub fn tensor_names(&self) -> Vec<String> {
        match self.kind {
            LayerKind::Conv => (0..9)
                .map(|m| weight_name(&self.name, m))
                .chain(std::iter::once(bias_name(&self.name)))
                .collect(),
            LayerKind::Conv1x1 => vec![weight_name(&self.name, 0), bias_name(&self.name)],
            _ => Vec::new(),
        }
    }
}

/// `<layer>.w<m>`: the `in x out` block applied to direction bin `m`.
pub fn weight_name(layer: &str, bin: usize) -> String {
    format!("{layer}.w{bin}")
}

pub fn bias_name(layer: &str) -> String {
    format!("{layer}.bias")
}

/// Ordered layer list of a style network.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkManifest {
    pub layers: Vec<LayerSpec>,
}

impl NetworkManifest {
    pub fn new(layers: Vec<LayerSpec>) -> Result<Self> {
        let m = NetworkManifest { layers };
        m.validate()?;
        Ok(m)
    }

    /// Checks channel chaining, pool/unpool nesting and the single transform slot.
    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::Manifest("manifest has no layers".into()));
        }
        let mut depth = 0usize;
        let mut transforms = 0;
        for (k, layer) in self.layers.iter().enumerate() {
            if layer.in_channels == 0 || layer.out_channels == 0 {
                return Err(Error::Manifest(format!(
                    "layer `{}` has zero channels",
                    layer.name
                )));
            }
            if let Some(prev) = k.checked_sub(1).map(|p| &self.layers[p]) {
                if prev.out_channels != layer.in_channels {
                    return Err(Error::Manifest(format!(
                        "`{}` outputs {} channels but `{}` expects {}",
                        prev.name, prev.out_channels, layer.name, layer.in_channels
                    )));
                }
            }
            let shape_preserving = !matches!(layer.kind, LayerKind::Conv | LayerKind::Conv1x1);
            if shape_preserving && layer.in_channels != layer.out_channels {
                return Err(Error::Manifest(format!(
                    "`{}` cannot change the channel count",
                    layer.name
                )));
            }
            match layer.kind {
                LayerKind::Pool => depth += 1,
                LayerKind::Unpool => {
                    depth = depth.checked_sub(1).ok_or_else(|| {
                        Error::Manifest(format!("`{}` has no matching pool", layer.name))
                    })?
                }
                LayerKind::Transform => transforms += 1,
                _ => {}
            }
        }
        if depth != 0 {
            return Err(Error::Manifest(format!(
                "{depth} pool layer(s) never unpooled"
            )));
        }
        if transforms > 1 {
            return Err(Error::Manifest(
                "at most one transform layer is allowed".into(),
            ));
        }
        let mut names: Vec<&str> = self.layers.iter().map(|l| l.name.as_str()).collect();
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Manifest(format!("duplicate layer name `{}`", w[0])));
        }
        Ok(())
    }

    pub fn input_channels(&self) -> usize {
        self.layers[0].in_channels
    }

    pub fn output_channels(&self) -> usize {
        self.layers.last().map_or(0, |l| l.out_channels)
    }

    pub fn transform_index(&self) -> Option<usize> {
        self.layers
            .iter()
            .position(|l| l.kind == LayerKind::Transform)
    }

    /// Layers ahead of the transform slot.
    pub fn encoder(&self) -> &[LayerSpec] {
        &self.layers[..self.transform_index().unwrap_or(self.layers.len())]
    }

    /// Resolution divisor of the encoder output on a grid.
    pub fn encoder_pool_factor(&self) -> usize {
        let pools = self
            .encoder()
            .iter()
            .filter(|l| l.kind == LayerKind::Pool)
            .count() as u32;
        2usize.pow(pools)
    }

    /// A VGG-like encoder/decoder: per stage two 3x3 convs with ReLU, a pool between
    /// stages, the transform at the bottom, and a mirrored decoder ending in 3 channels.
    pub fn encoder_decoder(widths: &[usize]) -> Result<Self> {
        if widths.is_empty() {
            return Err(Error::Manifest("need at least one stage width".into()));
        }
        let mut layers = Vec::new();
        let mut ch = 3;
        for (s, &w) in widths.iter().enumerate() {
            if s > 0 {
                layers.push(LayerSpec::new(
                    format!("enc{s}_pool"),
                    LayerKind::Pool,
                    ch,
                    ch,
                ));
            }
            layers.push(LayerSpec::new(format!("enc{s}_1"), LayerKind::Conv, ch, w));
            layers.push(LayerSpec::new(
                format!("enc{s}_1_relu"),
                LayerKind::Relu,
                w,
                w,
            ));
            ch = w;
            if s + 1 < widths.len() {
                layers.push(LayerSpec::new(format!("enc{s}_2"), LayerKind::Conv, w, w));
                layers.push(LayerSpec::new(
                    format!("enc{s}_2_relu"),
                    LayerKind::Relu,
                    w,
                    w,
                ));
            }
        }
        layers.push(LayerSpec::new("transform", LayerKind::Transform, ch, ch));
        for s in (0..widths.len()).rev() {
            let target = if s == 0 { widths[0] } else { widths[s - 1] };
            layers.push(LayerSpec::new(
                format!("dec{s}_1"),
                LayerKind::Conv,
                ch,
                target,
            ));
            layers.push(LayerSpec::new(
                format!("dec{s}_1_relu"),
                LayerKind::Relu,
                target,
                target,
            ));
            ch = target;
            if s > 0 {
                layers.push(LayerSpec::new(
                    format!("dec{s}_unpool"),
                    LayerKind::Unpool,
                    ch,
                    ch,
                ));
                layers.push(LayerSpec::new(format!("dec{s}_2"), LayerKind::Conv, ch, ch));
                layers.push(LayerSpec::new(
                    format!("dec{s}_2_relu"),
                    LayerKind::Relu,
                    ch,
                    ch,
                ));
            }
        }
        layers.push(LayerSpec::new("dec_out", LayerKind::Conv, ch, 3));
        NetworkManifest::new(layers)
    }
}
