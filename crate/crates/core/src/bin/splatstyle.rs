use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use nalgebra::Vector3;
use splatstyle::pipeline::{report_ablation, run, Ablation, RunConfig};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum AblationArg {
    RandomNormals,
    NoSampling,
}

/// Stylize a Gaussian splat scene with a style image.
#[derive(Debug, Parser)]
#[command(version)]
struct Args {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    style: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// Weight container with the network manifest.
    #[arg(long)]
    weights: PathBuf,
    #[arg(long, default_value_t = 16)]
    knn: usize,
    /// Fraction of splats removed as floaters.
    #[arg(long, default_value_t = 0.0)]
    filter_percentile: f64,
    /// Extra points sampled from the splat Gaussians.
    #[arg(long, default_value_t = 0)]
    samples: usize,
    /// Scene up direction as x,y,z.
    #[arg(long, value_parser = parse_up, default_value = "0,0,1", allow_hyphen_values = true)]
    up: Vector3<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Style blend in [0, 1].
    #[arg(long, default_value_t = 1.0)]
    strength: f64,
    /// Clear higher-order SH coefficients of recolored splats.
    #[arg(long)]
    zero_rest: bool,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    timing_out: Option<PathBuf>,
    #[arg(long, value_enum)]
    ablation: Option<AblationArg>,
    /// Graph nodes blended per splat center on writeback.
    #[arg(long, default_value_t = 4)]
    writeback_k: usize,
    /// Keep filtered splats with their original colors.
    #[arg(long)]
    keep_filtered: bool,
    /// Downscale the style image to this longest side.
    #[arg(long)]
    style_max_side: Option<usize>,
    /// Eigenvalue floor of the feature transform.
    #[arg(long, default_value_t = 1e-5)]
    epsilon: f64,
    /// Filter and graph statistics as JSON.
    #[arg(long)]
    diagnostics_out: Option<PathBuf>,
    /// Graph positions, normals, edges and bins as JSON.
    #[arg(long)]
    graph_dump: Option<PathBuf>,
}

fn parse_up(s: &str) -> Result<Vector3<f64>, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
        .collect::<Result<_, _>>()?;
    match parts[..] {
        [x, y, z] => Ok(Vector3::new(x, y, z)),
        _ => Err(format!("expected x,y,z, got `{s}`")),
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    let mut config = RunConfig::new(args.input, args.style, args.output, args.weights);
    let o = &mut config.options;
    o.knn = args.knn;
    o.filter_percentile = args.filter_percentile;
    o.samples = args.samples;
    o.up = args.up;
    o.seed = args.seed;
    o.transform.strength = args.strength;
    o.transform.epsilon = args.epsilon;
    o.zero_rest = args.zero_rest;
    o.writeback_neighbors = args.writeback_k;
    o.keep_filtered = args.keep_filtered;
    o.style_max_side = args.style_max_side;
    config.threads = args.threads;
    config.timing_out = args.timing_out;
    config.diagnostics_out = args.diagnostics_out;
    config.graph_dump_out = args.graph_dump;

    let result = match args.ablation {
        Some(AblationArg::RandomNormals) => report_ablation(&config, Ablation::RandomNormals),
        Some(AblationArg::NoSampling) => report_ablation(&config, Ablation::NoSampling),
        None => run(&config),
    };
    match result {
        Ok(t) => {
            eprintln!(
                "{} -> {} splats, {} nodes, {} edges; preprocess {:.2}s, stylize {:.2}s, total {:.2}s",
                t.splats_in, t.splats_out, t.nodes, t.edges, t.preprocess_s, t.stylize_s, t.total_s
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
