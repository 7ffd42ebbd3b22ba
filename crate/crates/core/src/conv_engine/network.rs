use super::manifest::{bias_name, weight_name, LayerKind};
use super::{build_dir_matrices, selection_conv, ConvWeights, FeatureMap, SparseDirMatrix};
use super::{NetworkManifest, WeightStore};
use crate::error::{Error, Result};
use crate::surface_graph::{downsample_graph, PoolMap, SurfaceGraph, NUM_BINS};

/// Replaces the features arriving at a manifest's transform layer.
pub trait FeatureTransform {
    fn apply(&mut self, content: &FeatureMap) -> Result<FeatureMap>;
}

impl<F> FeatureTransform for F
where
    F: FnMut(&FeatureMap) -> Result<FeatureMap>,
{
    fn apply(&mut self, content: &FeatureMap) -> Result<FeatureMap> {
        self(content)
    }
}

/// Passes features through unchanged.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityTransform;

impl FeatureTransform for IdentityTransform {
    fn apply(&mut self, content: &FeatureMap) -> Result<FeatureMap> {
        Ok(content.clone())
    }
}

#[derive(Debug, Clone)]
enum Layer {
    Conv(ConvWeights),
    Relu,
    Pool,
    Unpool,
    Transform,
}

/// A manifest with its weights resolved into executable layers.
#[derive(Debug, Clone)]
pub struct Network {
    manifest: NetworkManifest,
    layers: Vec<Layer>,
}

struct Level {
    graph: SurfaceGraph,
    matrices: SparseDirMatrix,
    /// Fine-to-this-level map; `None` at the input resolution.
    pool: Option<PoolMap>,
}

/// Voxel edge that halves a graph's resolution.
fn pool_voxel(graph: &SurfaceGraph) -> f64 {
    if graph.lattice.is_some() {
        2.0
    } else {
        let spacing = graph.mean_spacing();
        if spacing > 0.0 {
            2.0 * spacing
        } else {
            1.0
        }
    }
}

fn mean_pool(x: &FeatureMap, map: &PoolMap) -> Result<FeatureMap> {
    let c = x.cols();
    let mut out = FeatureMap::zeros(map.coarse_count(), c);
    let counts = map.member_counts();
    for (i, &k) in map.cluster_of.iter().enumerate() {
        for (o, v) in out.row_mut(k).iter_mut().zip(x.row(i)) {
            *o += v;
        }
    }
    for (k, &n) in counts.iter().enumerate() {
        let inv = 1.0 / n as f32;
        out.row_mut(k).iter_mut().for_each(|v| *v *= inv);
    }
    Ok(out)
}

fn unpool(x: &FeatureMap, map: &PoolMap) -> Result<FeatureMap> {
    let c = x.cols();
    let mut data = Vec::with_capacity(map.cluster_of.len() * c);
    for &k in &map.cluster_of {
        data.extend_from_slice(x.row(k));
    }
    FeatureMap::new(map.cluster_of.len(), c, data)
}

impl Network {
    pub fn new(weights: &WeightStore) -> Result<Self> {
        let manifest = weights.manifest.clone();
        manifest.validate()?;
        let layers = manifest
            .layers
            .iter()
            .map(|spec| {
                Ok(match spec.kind {
                    LayerKind::Conv | LayerKind::Conv1x1 => {
                        let bins = if spec.kind == LayerKind::Conv {
                            NUM_BINS
                        } else {
                            1
                        };
                        let mut taps: [Option<Vec<f32>>; NUM_BINS] = Default::default();
                        for (m, tap) in taps.iter_mut().enumerate().take(bins) {
                            let t = weights.get(&weight_name(&spec.name, m))?;
                            if t.shape != [spec.in_channels, spec.out_channels] {
                                return Err(Error::Weight(format!(
                                    "`{}` W_{m} has shape {:?}",
                                    spec.name, t.shape
                                )));
                            }
                            *tap = Some(t.data.clone());
                        }
                        let bias = weights.get(&bias_name(&spec.name))?.data.clone();
                        Layer::Conv(
                            ConvWeights::new(spec.in_channels, spec.out_channels, taps, bias)
                                .map_err(|e| Error::Weight(format!("`{}`: {e}", spec.name)))?,
                        )
                    }
                    LayerKind::Relu => Layer::Relu,
                    LayerKind::Pool => Layer::Pool,
                    LayerKind::Unpool => Layer::Unpool,
                    LayerKind::Transform => Layer::Transform,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Network { manifest, layers })
    }

    pub fn manifest(&self) -> &NetworkManifest {
        &self.manifest
    }

    /// Runs every layer; the transform layer, if any, calls `hook`.
    pub fn run(
        &self,
        graph: &SurfaceGraph,
        x0: &FeatureMap,
        hook: &mut dyn FeatureTransform,
    ) -> Result<FeatureMap> {
        self.run_prepared(graph, &build_dir_matrices(graph), x0, hook)
    }

    /// [`Network::run`] with the input-resolution matrices already built.
    pub fn run_prepared(
        &self,
        graph: &SurfaceGraph,
        matrices: &SparseDirMatrix,
        x0: &FeatureMap,
        hook: &mut dyn FeatureTransform,
    ) -> Result<FeatureMap> {
        self.execute(graph, matrices, x0, Some(hook), self.layers.len())
    }

    /// Runs the layers ahead of the transform slot and returns the features there.
    pub fn encode(&self, graph: &SurfaceGraph, x0: &FeatureMap) -> Result<FeatureMap> {
        let stop = self
            .manifest
            .transform_index()
            .ok_or_else(|| Error::Manifest("manifest has no transform layer".into()))?;
        self.execute(graph, &build_dir_matrices(graph), x0, None, stop)
    }

    fn execute(
        &self,
        graph: &SurfaceGraph,
        base: &SparseDirMatrix,
        x0: &FeatureMap,
        mut hook: Option<&mut dyn FeatureTransform>,
        stop: usize,
    ) -> Result<FeatureMap> {
        if x0.cols() != self.manifest.input_channels() {
            return Err(Error::Manifest(format!(
                "network expects {} input channels, got {}",
                self.manifest.input_channels(),
                x0.cols()
            )));
        }
        if x0.rows() != graph.node_count() {
            return Err(Error::Shape(format!(
                "{} feature rows for a {}-node graph",
                x0.rows(),
                graph.node_count()
            )));
        }

        if base.nodes() != graph.node_count() {
            return Err(Error::Shape(format!(
                "matrices cover {} nodes, graph has {}",
                base.nodes(),
                graph.node_count()
            )));
        }
        let mut levels: Vec<Level> = Vec::new();
        let mut x = x0.clone();

        for (spec, layer) in self.manifest.layers.iter().zip(&self.layers).take(stop) {
            x = match layer {
                Layer::Conv(w) => {
                    let s = levels.last().map_or(base, |l| &l.matrices);
                    selection_conv(&x, s, w)?
                }
                Layer::Relu => {
                    x.map_inplace(|v| v.max(0.0));
                    x
                }
                Layer::Pool => {
                    let current = levels.last().map_or(graph, |l| &l.graph);
                    let (coarse, map) = downsample_graph(current, pool_voxel(current))?;
                    let pooled = mean_pool(&x, &map)?;
                    levels.push(Level {
                        matrices: build_dir_matrices(&coarse),
                        graph: coarse,
                        pool: Some(map),
                    });
                    pooled
                }
                Layer::Unpool => {
                    let level = levels.pop().ok_or_else(|| {
                        Error::Manifest(format!("`{}` without a pool", spec.name))
                    })?;
                    unpool(&x, level.pool.as_ref().expect("pooled levels carry a map"))?
                }
                Layer::Transform => match hook.as_deref_mut() {
                    Some(h) => {
                        let y = h.apply(&x)?;
                        if y.rows() != x.rows() || y.cols() != x.cols() {
                            return Err(Error::Shape(format!(
                                "transform returned {}x{} for {}x{} features",
                                y.rows(),
                                y.cols(),
                                x.rows(),
                                x.cols()
                            )));
                        }
                        y
                    }
                    None => x,
                },
            };
            if !x.is_finite() {
                return Err(Error::Numeric(format!(
                    "layer `{}` produced non-finite values",
                    spec.name
                )));
            }
        }
        Ok(x)
    }
}

/// One-shot convenience over [`Network::new`] and [`Network::run`].
pub fn run_network(
    graph: &SurfaceGraph,
    weights: &WeightStore,
    x0: &FeatureMap,
    hook: &mut dyn FeatureTransform,
) -> Result<FeatureMap> {
    Network::new(weights)?.run(graph, x0, hook)
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::conv_engine::{LayerSpec, Tensor};
    use crate::surface_graph::grid_graph;

    #[test]
    fn identity_bundle_is_identity() {
        let g = grid_graph(4, 5).unwrap();
        let x = FeatureMap::new(20, 3, (0..60).map(|v| v as f32 * 0.1).collect()).unwrap();
        let w = WeightStore::identity_bundle(3).unwrap();
        let y = run_network(&g, &w, &x, &mut IdentityTransform).unwrap();
        assert_eq!(y, x);
    }

    #[test]
    fn pool_then_unpool_block_averages() {
        let g = grid_graph(4, 4).unwrap();
        let manifest = NetworkManifest::new(vec![
            LayerSpec::new("p", LayerKind::Pool, 1, 1),
            LayerSpec::new("u", LayerKind::Unpool, 1, 1),
        ])
        .unwrap();
        let w = WeightStore::new(manifest, BTreeMap::new()).unwrap();
        let x = FeatureMap::new(16, 1, (0..16).map(|v| v as f32).collect()).unwrap();
        let y = run_network(&g, &w, &x, &mut IdentityTransform).unwrap();
        // Top-left block holds pixels 0, 1, 4, 5.
        let expected = [
            2.5, 2.5, 4.5, 4.5, 2.5, 2.5, 4.5, 4.5, 10.5, 10.5, 12.5, 12.5, 10.5, 10.5, 12.5, 12.5,
        ];
        assert_eq!(y.data(), &expected);
    }

    #[test]
    fn transform_hook_sees_encoder_output() {
        let g = grid_graph(8, 8).unwrap();
        let w = WeightStore::random(NetworkManifest::encoder_decoder(&[4, 6]).unwrap(), 1).unwrap();
        let net = Network::new(&w).unwrap();
        let x = FeatureMap::from_rgb(&vec![[0.2, 0.4, 0.6]; 64]);
        let encoded = net.encode(&g, &x).unwrap();
        assert_eq!((encoded.rows(), encoded.cols()), (16, 6));
        let mut seen = None;
        let mut hook = |f: &FeatureMap| {
            seen = Some(f.clone());
            Ok(f.clone())
        };
        let out = net.run(&g, &x, &mut hook).unwrap();
        assert_eq!(seen.unwrap(), encoded);
        assert_eq!((out.rows(), out.cols()), (64, 3));
    }

    #[test]
    fn errors_are_reported() {
        let g = grid_graph(2, 2).unwrap();
        let w = WeightStore::identity_bundle(3).unwrap();
        let x = FeatureMap::zeros(4, 2);
        assert!(matches!(
            run_network(&g, &w, &x, &mut IdentityTransform),
            Err(Error::Manifest(_))
        ));

        let mut broken = w.clone();
        broken.tensors.remove("encode.w0");
        assert!(matches!(Network::new(&broken), Err(Error::Weight(_))));

        let mut bad_hook = |_: &FeatureMap| Ok(FeatureMap::zeros(1, 3));
        assert!(run_network(&g, &w, &FeatureMap::zeros(4, 3), &mut bad_hook).is_err());
    }

    #[test]
    fn overflow_is_a_numeric_error() {
        let g = grid_graph(2, 2).unwrap();
        let mut w = WeightStore::identity_bundle(1).unwrap();
        w.tensors.insert(
            "encode.w0".into(),
            Tensor::new(vec![1, 1], vec![f32::MAX]).unwrap(),
        );
        let x = FeatureMap::new(4, 1, vec![10.0; 4]).unwrap();
        assert!(matches!(
            run_network(&g, &w, &x, &mut IdentityTransform),
            Err(Error::Numeric(_))
        ));
    }
}
