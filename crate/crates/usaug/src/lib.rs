//! Deterministic ultrasound image augmentation.
//!
//! The crate provides beam-aware geometric remapping (probe type change,
//! convexity change, depth change), field-of-view preprocessing, photometric
//! and noise transforms, and probabilistic augmentation pipelines that
//! generate reproducible positive pairs for joint-embedding self-supervised
//! learning.
//!
//! Everything is a pure function of its inputs and a seeded [`rng::RngStream`];
//! batches may be processed from any number of threads without affecting
//! outputs. The `parallel` feature (on by default) enables rayon-backed
//! data parallelism in the batch helpers and in a few per-image inner loops;
//! without it the same code paths run sequentially.

pub mod batch;
pub mod beam;
pub mod error;
pub mod fov;
pub mod geometry;
pub mod image;
pub mod noise;
pub mod photometric;
pub mod pipeline;
pub mod rng;
pub mod spatial;
pub mod wavelet;

pub use beam::{BeamDescriptor, Point, ProbeType};
pub use error::{Error, Result};
pub use fov::{apply_mask, build_fov_mask, crop_to_fov, preprocess, FovMask, PreprocessResult};
pub use image::Image;
pub use pipeline::{apply_pipeline, make_positive_pair, preset, PipelineConfig, TransformSpec};
pub use rng::{make_rng_stream, RngStream};
