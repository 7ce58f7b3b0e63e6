//! Error type shared by all transform and pipeline operations.

use thiserror::Error;

/// Errors raised by image transforms, beam geometry, and pipeline configuration.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// A scalar parameter is outside its documented domain.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// Image, mask, or map dimensions are inconsistent.
    #[error("shape error: {0}")]
    Shape(String),

    /// A beam descriptor is degenerate or a geometric construction has no solution.
    #[error("geometry error: {0}")]
    Geometry(String),

    /// A named preset, transform id, or file could not be resolved.
    #[error("lookup error: {0}")]
    Lookup(String),

    /// A pipeline configuration document is malformed.
    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
