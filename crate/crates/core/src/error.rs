use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("raster data length {len} does not match {width}x{height}")]
    RasterSize { width: usize, height: usize, len: usize },
    #[error("dimension mismatch: expected {expected:?}, got {got:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("nothing to normalize")]
    NothingToNormalize,
    #[error("mask has no foreground pixels")]
    EmptyMask,
    #[error("background model needs at least 2 frames, got {0}")]
    NotEnoughFrames(usize),
    #[error("cannot form {k} clusters from {points} points")]
    TooFewPoints { k: usize, points: usize },
    #[error("silhouette needs at least 2 clusters")]
    SingleCluster,
    #[error("hand does not touch region border")]
    NoBorderContact,
    #[error("bad seed: palm estimate lies outside the sampled contour")]
    BadSeed,
    #[error("degenerate wrist line")]
    DegenerateWristLine,
    #[error("invalid hand spec: {0}")]
    InvalidSpec(String),
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("empty dataset")]
    EmptyDataset,
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("config: {0}")]
    Config(String),
    #[error("no frames")]
    NoFrames,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Image(#[from] image::ImageError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
