//! Crate-wide error type.

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("point cloud is empty")]
    EmptyCloud,

    #[error("composition must be a nonempty sequence of positive block sizes")]
    InvalidComposition,

    #[error("data length {data} does not match composition total {composition}")]
    LengthMismatch { data: usize, composition: usize },

    #[error("homology level {level} not present in diagram (max level {max})")]
    MissingLevel { level: usize, max: usize },

    #[error("fewer than 2 lifetimes survive below the maximum radius (got {0})")]
    DegenerateSample(usize),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("missing metadata sidecar {0}")]
    MissingMetadata(PathBuf),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
