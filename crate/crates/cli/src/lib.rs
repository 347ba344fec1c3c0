//! Harness library: configuration, named scenarios, artifact formats, stage
//! runners, and the validation suite behind the `conoscatter` binary.

pub mod accept;
pub mod config;
pub mod io;
pub mod manifest;
pub mod runner;
pub mod scenario;

use conoscatter::scatter::DataSliceSpec;
use nalgebra::Vector3;

/// Build the configured data slice.
pub fn slice_from_config(config: &config::ExperimentConfig) -> DataSliceSpec {
    match config.slice.kind.as_str() {
        "rotated" => DataSliceSpec::rotated_backscatter(
            Vector3::new(config.slice.axis[0], config.slice.axis[1], config.slice.axis[2]),
            config.slice.angle_deg.to_radians(),
        ),
        "identity" => DataSliceSpec::graph(std::sync::Arc::new(|_s, omega| omega)),
        _ => DataSliceSpec::backscatter(),
    }
}

/// Configure the global rayon pool once (0 = library default).
pub fn configure_threads(threads: usize) {
    if threads > 0 {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
}
