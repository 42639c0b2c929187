use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("path has no vertices")]
    EmptyPath,
    #[error("exponent {0} outside the open interval (1/2, 1)")]
    BadExponent(f64),
    #[error("intensity must be positive, got {0}")]
    BadIntensity(f64),
    #[error("invalid window: {0}")]
    BadWindow(String),
    #[error("point ({x}, {y}) duplicates an existing configuration point")]
    DuplicatePoint { x: f64, y: f64 },
    #[error("point ({x}, {y}) lies outside the window")]
    OutsideWindow { x: f64, y: f64 },
    #[error("point index {index} out of range for a configuration of {len} points")]
    BadIndex { index: usize, len: usize },
    #[error("interior point index {0} appears more than once")]
    RepeatedIndex(usize),
    #[error("segment {segment} has zero duration but positive length")]
    InfiniteEnergy { segment: usize },
    #[error("{found} candidate points exceed the limit of {limit}")]
    TooManyCandidates { found: usize, limit: usize },
    #[error("box side must be a positive odd integer, got {0}")]
    BadBoxSize(i64),
    #[error("animal size {n} exceeds the enumeration cap {cap}")]
    TooLarge { n: usize, cap: usize },
    #[error("malformed target: {0}")]
    BadTarget(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid experiment spec: {}", .0.join("; "))]
    InvalidSpec(Vec<String>),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
