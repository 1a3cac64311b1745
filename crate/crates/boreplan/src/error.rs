//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by scene I/O, validation and the benchmark harness.
///
/// Planner failures (no path found within the time budget) are *not* errors;
/// they are reported through [`crate::planner::PlanResult::failed`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("no obstacles: an obstacle set must contain at least one non-empty structure")]
    NoObstacles,

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("scene file `{path}` failed to parse at {location}: {message}")]
    SceneParse {
        path: String,
        location: String,
        message: String,
    },

    #[error("scene validation failed for field `{field}`: {reason}")]
    SceneValidation { field: String, reason: String },

    #[error("report key mismatch; missing keys: {missing:?}")]
    KeyMismatch { missing: Vec<String> },

    #[error("path file `{path}` is malformed: {reason}")]
    PathFile { path: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
