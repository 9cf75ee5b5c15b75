use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension too small: need at least {need}x{need}, got {h}x{w}")]
    DimensionTooSmall { need: usize, h: usize, w: usize },
    #[error("unsupported difference order {0} (expected 3 or 4)")]
    UnsupportedOrder(usize),
    #[error("threshold must be non-negative, got {0}")]
    NegativeThreshold(f64),
    #[error("sigma must be positive, got {0}")]
    NonPositiveSigma(f64),
    #[error("singular value decomposition of slice {0} did not produce finite values")]
    SvdFailed(usize),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("beta1 must be positive for the p-update")]
    ZeroBeta1,
    #[error("beta2 must be positive for the q-update")]
    ZeroBeta2,
    #[error("gamma/beta2 ratio is negative ({0})")]
    NegativeRatio(f64),
    #[error("channel list is empty")]
    EmptyChannelList,
    #[error("invalid upsampling scale {0} (must be >= 2)")]
    InvalidScale(usize),
    #[error("degenerate bounding box ({w} x {h})")]
    DegenerateBox { w: f64, h: f64 },
    #[error("patch {h}x{w} is not divisible by cell size {cell}")]
    IndivisibleDimensions { h: usize, w: usize, cell: usize },
    #[error("empty input")]
    EmptyInput,
    #[error("empty frame")]
    EmptyFrame,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("missing ground truth file in {0}")]
    MissingGroundTruth(PathBuf),
    #[error("frame count mismatch: {frames} frames but {boxes} ground-truth lines")]
    FrameCountMismatch { frames: usize, boxes: usize },
    #[error("unparsable line {line}: {content:?}")]
    UnparsableLine { line: usize, content: String },
    #[error("unknown config key `{key}`{}", suggestion.as_ref().map(|s| format!(" (did you mean `{s}`?)")).unwrap_or_default())]
    UnknownKey { key: String, suggestion: Option<String> },
    #[error("type mismatch for `{key}`: expected {expected}")]
    TypeMismatch { key: String, expected: &'static str },
    #[error("failed to read sequence {name}: {reason}")]
    SequenceRead { name: String, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Image(#[from] image::ImageError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
