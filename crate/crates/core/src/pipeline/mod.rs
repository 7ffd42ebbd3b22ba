//! End-to-end scene stylization with a timing report.
//!
//! Stages run in order: parse, filter, sample, graph (normals, frames, edges,
//! selections, matrices), stylize, writeback, write. Preprocessing time covers
//! filter through matrices, stylization time covers the network and writeback.

use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::Vector3;
use serde::Serialize;

use crate::conv_engine::{build_dir_matrices, FeatureMap, Network, WeightStore};
use crate::error::{Error, Result};
use crate::preprocess::{build_point_cloud, filter_by_percentile, FilterDiagnostics, PointCloud};
use crate::splat_io::{read_splat_ply, write_splat_ply_file, SplatScene};
use crate::stylizer::{
    encode_style, linear_transform, writeback, StyleImage, TransformSpec, WritebackOptions,
};
use crate::surface_graph::{DepthStats, NormalEstimator, PcaNormals, RandomNormals, SurfaceGraph};
use crate::util::{mix_seed, write_atomic};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Setup,
    Parse,
    Filter,
    Sample,
    Graph,
    Stylize,
    Writeback,
    Write,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Stage::Setup => "setup",
            Stage::Parse => "parse",
            Stage::Filter => "filter",
            Stage::Sample => "sample",
            Stage::Graph => "graph",
            Stage::Stylize => "stylize",
            Stage::Writeback => "writeback",
            Stage::Write => "write",
        };
        f.write_str(name)
    }
}

/// An [`Error`] tagged with the stage that raised it.
#[derive(Debug, thiserror::Error)]
#[error("{stage} stage failed: {source}")]
pub struct StageError {
    pub stage: Stage,
    #[source]
    pub source: Error,
}

trait AtStage<T> {
    fn at(self, stage: Stage) -> Result<T, StageError>;
}

impl<T> AtStage<T> for Result<T> {
    fn at(self, stage: Stage) -> Result<T, StageError> {
        self.map_err(|source| StageError { stage, source })
    }
}

/// Degraded variants for side-by-side comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ablation {
    /// Seeded random unit normals instead of PCA normals.
    RandomNormals,
    /// Splat centers only, whatever `samples` says.
    NoSampling,
}

/// Algorithm parameters, independent of where scenes live on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct StyleOptions {
    pub knn: usize,
    /// Fraction of splats removed as floaters, in `[0, 1)`.
    pub filter_percentile: f64,
    /// Extra points sampled from splat Gaussians beyond the centers.
    pub samples: usize,
    pub up: Vector3<f64>,
    pub seed: u64,
    pub transform: TransformSpec,
    pub writeback_neighbors: usize,
    pub zero_rest: bool,
    /// Keep filtered splats (original colors) instead of dropping them.
    pub keep_filtered: bool,
    /// Downscale the style image so its longer side is at most this.
    pub style_max_side: Option<usize>,
    pub ablation: Option<Ablation>,
}

impl Default for StyleOptions {
    fn default() -> Self {
        StyleOptions {
            knn: 16,
            filter_percentile: 0.0,
            samples: 0,
            up: Vector3::z(),
            seed: 0,
            transform: TransformSpec::default(),
            writeback_neighbors: WritebackOptions::default().neighbors,
            zero_rest: false,
            keep_filtered: false,
            style_max_side: None,
            ablation: None,
        }
    }
}

impl StyleOptions {
    pub fn validate(&self) -> Result<()> {
        if self.knn < 3 {
            return Err(Error::InvalidArgument(format!(
                "knn must be at least 3, got {}",
                self.knn
            )));
        }
        if !(0.0..1.0).contains(&self.filter_percentile) {
            return Err(Error::InvalidArgument(format!(
                "filter percentile must lie in [0, 1), got {}",
                self.filter_percentile
            )));
        }
        self.transform.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimingReport {
    pub preprocess_s: f64,
    pub stylize_s: f64,
    pub total_s: f64,
    pub nodes: usize,
    pub edges: usize,
    pub splats_in: usize,
    pub splats_out: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Diagnostics {
    pub filter: Option<FilterDiagnostics>,
    pub depth: DepthStats,
}

#[derive(Debug, Clone)]
pub struct Stylized {
    pub scene: SplatScene,
    pub timing: TimingReport,
    pub diagnostics: Diagnostics,
    pub graph: SurfaceGraph,
}

fn style_for(image: &StyleImage, network: &Network, max_side: Option<usize>) -> StyleImage {
    let image = max_side.map_or_else(|| image.clone(), |m| image.downscaled(m));
    image.cropped_to_multiple(network.manifest().encoder_pool_factor())
}

/// The whole pipeline on in-memory inputs. Timing excludes parsing and writing.
pub fn stylize_scene(
    scene: &SplatScene,
    style: &StyleImage,
    network: &Network,
    opts: &StyleOptions,
) -> Result<Stylized, StageError> {
    let start = Instant::now();
    opts.validate().at(Stage::Setup)?;
    if scene.is_empty() {
        return Err(StageError {
            stage: Stage::Parse,
            source: Error::EmptyScene,
        });
    }

    let (kept, report) = if opts.filter_percentile > 0.0 {
        let (kept, report) =
            filter_by_percentile(scene, opts.knn, opts.filter_percentile).at(Stage::Filter)?;
        (kept, Some(report))
    } else {
        (scene.clone(), None)
    };

    let samples = match opts.ablation {
        Some(Ablation::NoSampling) => 0,
        _ => opts.samples,
    };
    let cloud: PointCloud = build_point_cloud(&kept, samples, opts.seed).at(Stage::Sample)?;

    let estimator: Box<dyn NormalEstimator> = match opts.ablation {
        Some(Ablation::RandomNormals) => Box::new(RandomNormals {
            seed: mix_seed(opts.seed, 1),
        }),
        _ => Box::new(PcaNormals::default()),
    };
    let graph =
        SurfaceGraph::from_points(cloud.points.clone(), estimator.as_ref(), opts.up, opts.knn)
            .at(Stage::Graph)?;
    let matrices = build_dir_matrices(&graph);
    let preprocess_s = start.elapsed().as_secs_f64();

    let stylize_start = Instant::now();
    let style = style_for(style, network, opts.style_max_side);
    let style_features = encode_style(&style, network).at(Stage::Stylize)?;
    let mut hook =
        |content: &FeatureMap| linear_transform(content, &style_features, &opts.transform);
    let node_rgb = network
        .run_prepared(
            &graph,
            &matrices,
            &FeatureMap::from_rgb(&cloud.colors),
            &mut hook,
        )
        .and_then(|f| f.to_rgb())
        .at(Stage::Stylize)?
        .into_iter()
        .map(|c| c.map(|v| v.clamp(0.0, 1.0)))
        .collect::<Vec<_>>();

    let removed = report.as_ref().map_or(&[][..], |r| &r.removed[..]);
    let wb = WritebackOptions {
        neighbors: opts.writeback_neighbors,
        zero_rest: opts.zero_rest,
        drop_removed: !opts.keep_filtered,
    };
    let out = writeback(scene, removed, &cloud, &node_rgb, &wb).at(Stage::Writeback)?;
    let stylize_s = stylize_start.elapsed().as_secs_f64();

    let timing = TimingReport {
        preprocess_s,
        stylize_s,
        total_s: start.elapsed().as_secs_f64(),
        nodes: graph.node_count(),
        edges: graph.edge_count(),
        splats_in: scene.len(),
        splats_out: out.len(),
    };
    let diagnostics = Diagnostics {
        filter: report.map(|r| r.diagnostics(32)),
        depth: graph.depth_stats(),
    };
    Ok(Stylized {
        scene: out,
        timing,
        diagnostics,
        graph,
    })
}

/// File-level configuration of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub input: PathBuf,
    pub style: PathBuf,
    pub output: PathBuf,
    pub weights: PathBuf,
    pub options: StyleOptions,
    /// Worker threads; `None` uses every available core.
    pub threads: Option<usize>,
    pub timing_out: Option<PathBuf>,
    pub diagnostics_out: Option<PathBuf>,
    pub graph_dump_out: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(
        input: impl Into<PathBuf>,
        style: impl Into<PathBuf>,
        output: impl Into<PathBuf>,
        weights: impl Into<PathBuf>,
    ) -> Self {
        RunConfig {
            input: input.into(),
            style: style.into(),
            output: output.into(),
            weights: weights.into(),
            options: StyleOptions::default(),
            threads: None,
            timing_out: None,
            diagnostics_out: None,
            graph_dump_out: None,
        }
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, &serde_json::to_vec_pretty(value)?)
}

fn run_inner(config: &RunConfig) -> Result<TimingReport, StageError> {
    let start = Instant::now();
    let scene = read_splat_ply(&config.input).at(Stage::Parse)?;
    let style = StyleImage::load(&config.style).at(Stage::Parse)?;
    let weights = WeightStore::read(&config.weights).at(Stage::Parse)?;
    let network = Network::new(&weights).at(Stage::Parse)?;

    let result = stylize_scene(&scene, &style, &network, &config.options)?;

    write_splat_ply_file(&result.scene, &config.output).at(Stage::Write)?;
    let mut timing = result.timing;
    timing.total_s = start.elapsed().as_secs_f64();
    if let Some(path) = &config.timing_out {
        write_json(path, &timing).at(Stage::Write)?;
    }
    if let Some(path) = &config.diagnostics_out {
        write_json(path, &result.diagnostics).at(Stage::Write)?;
    }
    if let Some(path) = &config.graph_dump_out {
        write_json(path, &result.graph.dump()).at(Stage::Write)?;
    }
    Ok(timing)
}

/// Reads the inputs, stylizes and writes the output scene atomically.
pub fn run(config: &RunConfig) -> Result<TimingReport, StageError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = config.threads {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))
        .at(Stage::Setup)?;
    pool.install(|| run_inner(config))
}

/// [`run`] with one component degraded.
pub fn report_ablation(config: &RunConfig, mode: Ablation) -> Result<TimingReport, StageError> {
    let mut config = config.clone();
    config.options.ablation = Some(mode);
    run(&config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::splat_io::{grid_scene, parse_splat_ply};

    fn gray_style() -> StyleImage {
        StyleImage::from_fn(32, 32, |r, c| {
            [0.2 + 0.5 * (r % 2) as f64, 0.4, 0.1 + 0.02 * c as f64]
        })
        .unwrap()
    }

    #[test]
    fn identity_run_preserves_colors() {
        let scene = grid_scene(12, 12, |r, c| [r as f64 / 12.0, c as f64 / 12.0, 0.5]);
        let net = Network::new(&WeightStore::identity_bundle(3).unwrap()).unwrap();
        let mut opts = StyleOptions {
            knn: 8,
            ..Default::default()
        };
        opts.transform.strength = 0.0;
        let out = stylize_scene(&scene, &gray_style(), &net, &opts).unwrap();
        assert_eq!(out.scene.len(), scene.len());
        for (a, b) in out.scene.splats.iter().zip(&scene.splats) {
            for (x, y) in a.base_color().iter().zip(b.base_color()) {
                assert!((x - y).abs() < 1e-6);
            }
        }
        assert_eq!(out.timing.nodes, 144);
        assert!(out.timing.preprocess_s >= 0.0 && out.timing.stylize_s >= 0.0);
    }

    #[test]
    fn errors_carry_stage() {
        let scene = grid_scene(2, 2, |_, _| [0.5; 3]);
        let net = Network::new(&WeightStore::identity_bundle(3).unwrap()).unwrap();
        let err = stylize_scene(&scene, &gray_style(), &net, &StyleOptions::default()).unwrap_err();
        assert_eq!(err.stage, Stage::Graph);
        assert!(err.to_string().starts_with("graph stage failed"));
        let bad = StyleOptions {
            knn: 2,
            ..Default::default()
        };
        assert_eq!(
            stylize_scene(&scene, &gray_style(), &net, &bad)
                .unwrap_err()
                .stage,
            Stage::Setup
        );
    }

    #[test]
    fn run_writes_outputs_and_leaves_nothing_on_failure() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("in.ply");
        let style = dir.path().join("style.png");
        let weights = dir.path().join("w.bin");
        write_splat_ply_file(&grid_scene(8, 8, |r, _| [r as f64 / 8.0, 0.3, 0.6]), &input).unwrap();
        image::RgbImage::from_fn(32, 32, |x, y| {
            image::Rgb([(x * 8) as u8, (y * 8) as u8, 128])
        })
        .save(&style)
        .unwrap();
        WeightStore::identity_bundle(3)
            .unwrap()
            .write(&weights)
            .unwrap();

        let mut config = RunConfig::new(&input, &style, dir.path().join("out.ply"), &weights);
        config.options.knn = 8;
        config.threads = Some(1);
        config.timing_out = Some(dir.path().join("timing.json"));
        let timing = run(&config).unwrap();
        assert_eq!((timing.splats_in, timing.splats_out), (64, 64));
        let out = parse_splat_ply(&std::fs::read(&config.output).unwrap()).unwrap();
        assert_eq!(out.len(), 64);
        let json: serde_json::Value =
            serde_json::from_slice(&std::fs::read(dir.path().join("timing.json")).unwrap())
                .unwrap();
        for key in [
            "preprocess_s",
            "stylize_s",
            "total_s",
            "nodes",
            "edges",
            "splats_in",
            "splats_out",
        ] {
            assert!(json.get(key).is_some(), "missing {key}");
        }

        let mut broken = config.clone();
        broken.output = dir.path().join("never.ply");
        broken.weights = dir.path().join("missing.bin");
        assert_eq!(run(&broken).unwrap_err().stage, Stage::Parse);
        assert!(!broken.output.exists());
    }
}
