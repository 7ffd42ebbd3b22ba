//! Scene cleanup and densification ahead of graph construction.

mod filter;
mod sampling;

pub use filter::{
    filter_by_percentile, neighborhood_offsets, percentile_cut, removal_count, survivors,
    FilterDiagnostics, FilterReport,
};
pub use sampling::{
    allocate_samples, build_point_cloud, sample_from_splat, sampling_weight, PointCloud,
};
