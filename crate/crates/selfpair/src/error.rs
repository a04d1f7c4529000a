use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("no two disjoint {size}x{size} patches fit in a {height}x{width} source")]
    InfeasibleCrop {
        height: usize,
        width: usize,
        size: usize,
    },
    #[error("label contains no foreground instances")]
    NoInstances,
    #[error("image has zero pixels")]
    EmptyImage,
    #[error("paste plan references pixels outside the target")]
    PlanOutOfBounds,
    #[error("source {0}: every enabled strategy failed ({1})")]
    SourceUnusable(String, String),
    #[error("missing mask for stem '{0}'")]
    MissingMask(String),
    #[error("failed to decode '{0}': {1}")]
    UndecodableFile(String, String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("validation failed for sample '{0}': {1}")]
    ValidationFailed(String, String),
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("image codec failure: {0}")]
    Codec(#[from] image::ImageError),
    #[error("manifest parse failure: {0}")]
    Manifest(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
