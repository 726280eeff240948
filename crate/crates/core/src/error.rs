use std::path::PathBuf;

/// Errors produced by the counting engine.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("RLE counts sum to {sum} but the mask has {expected} pixels")]
    SumMismatch { sum: u64, expected: u64 },

    #[error("degenerate bounding box {w}x{h}")]
    DegenerateBox { w: i64, h: i64 },

    #[error("mask dimensions differ: {a:?} vs {b:?}")]
    DimensionMismatch { a: (u32, u32), b: (u32, u32) },

    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("too few kernels: need at least {needed}, got {got}")]
    TooFewKernels { needed: usize, got: usize },

    #[error("no path from node {start} to node {end}")]
    NoPath { start: usize, end: usize },

    #[error("y = {y} is outside the polyline range [0, {max}]")]
    OutOfRange { y: f64, max: f64 },

    #[error("no ears found in scene")]
    NoEarsFound,

    #[error("synthetic spec infeasible: {0}")]
    SpecInfeasible(String),

    #[error("scene layout overlap: {0}")]
    LayoutOverlap(String),

    #[error("no input files in {}", .0.display())]
    NoInputFiles(PathBuf),

    #[error("empty input")]
    EmptyInput,

    #[error("ground truth must be positive (ear {0})")]
    NonPositiveTruth(String),

    #[error("truth values have zero variance")]
    DegenerateVariance,

    #[error("ear id mismatch: result {result} vs annotation {annotation}")]
    IdMismatch { result: String, annotation: String },

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("contract violation in candidate {id}: {reason}")]
    Contract { id: String, reason: String },

    #[error("{path}: {message}")]
    Schema { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Image(#[from] image::ImageError),
}

pub type Result<T> = std::result::Result<T, Error>;
