use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SeriesError {
    #[error("series is empty")]
    Empty,
    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("diverged (non-finite or exploding) trajectory for process {process} (seed {seed})")]
    NonFiniteTrajectory { process: String, seed: u64 },
    #[error("invalid simulation argument: {0}")]
    InvalidArgument(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectraError {
    #[error("lag {lag} out of range for series of length {len}")]
    LagOutOfRange { lag: isize, len: usize },
    #[error("series of length {len} is too short (need at least {min})")]
    SeriesTooShort { len: usize, min: usize },
    #[error("window truncation {truncation} must be below series length {len}")]
    WindowTooWide { truncation: usize, len: usize },
    #[error("target length {target} is shorter than series length {len}")]
    TargetShorterThanSeries { target: usize, len: usize },
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("need at least 2 training images, got {0}")]
    TooFewImages(usize),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NnError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("image {size}x{size} too small for the configured layers")]
    ImageTooSmall { size: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("non-finite values after {0}")]
    NonFinite(&'static str),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SsvsError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("requested {requested} components but numerical rank is {rank}")]
    RankDeficient { requested: usize, rank: usize },
    #[error("posterior covariance is singular even after jitter")]
    SingularPosteriorCovariance,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("length mismatch: {0} predictions vs {1} labels")]
    LengthMismatch(usize, usize),
    #[error("AUC needs both classes present")]
    OneClassOnly,
    #[error("dataset of {size} series too small for k = {k}")]
    DatasetTooSmall { size: usize, k: usize },
    #[error("empty input")]
    Empty,
}

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("ragged rows: line {line} has {got} values, expected {expected}")]
    RaggedRows { line: usize, expected: usize, got: usize },
    #[error("file contains no rows")]
    EmptyFile,
    #[error("bad magic or version in {0}")]
    BadHeader(&'static str),
    #[error("corrupt file: {0}")]
    Corrupt(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("image: {0}")]
    Image(#[from] image::ImageError),
}

/// Crate-level error.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Spectra(#[from] SpectraError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Ssvs(#[from] SsvsError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("configuration: {0}")]
    Config(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
