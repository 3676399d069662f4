use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("box size must be strictly positive (w = {w}, h = {h})")]
    NonPositiveSize { w: f64, h: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("degenerate quadrilateral: {0}")]
    DegenerateQuad(&'static str),

    #[error("encodings come from different anchors (r = {left} vs {right})")]
    AnchorMismatch { left: f64, right: f64 },

    #[error("empty batch")]
    EmptyBatch,

    #[error("score {0} outside [0, 1]")]
    InvalidScore(f64),

    #[error("line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },

    #[error("no ground truth objects for this category")]
    NoGroundTruth,

    #[error("empty input")]
    EmptyInput,

    #[error("invalid range: {0}")]
    InvalidRange(String),

    #[error("invalid sweep spec: {0}")]
    InvalidSpec(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("cannot parse box {input:?}: {reason}")]
    ParseBox { input: String, reason: String },
}
