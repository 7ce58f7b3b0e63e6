//! Batch front end for the ultrasound augmentation library: corpus
//! preprocessing, positive-pair emission, pipeline inspection, and a
//! per-transform runtime benchmark.

pub mod manifest;
pub mod report;
pub mod run;

pub use manifest::{BeamSpec, Manifest, ManifestEntry};
pub use report::{RuntimeReport, TransformTiming};
pub use run::{
    render_inspect, resolve_pipeline, run_bench, run_pair_emit, run_preprocess, RunSummary,
};
