use std::path::PathBuf;

/// Every failure the toolkit can report.
///
/// Variants are grouped roughly by the stage that raises them. The FFI layer
/// maps each variant to a stable integer code via [`Error::code`].
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("file not found: {0}")]
    FileNotFound(PathBuf),
    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),
    #[error("corrupt image data: {0}")]
    CorruptData(String),
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("kernel side {side} too large for {width}x{height} image")]
    KernelTooLarge { side: usize, width: usize, height: usize },
    #[error("invalid gaussian sigma {0}")]
    InvalidSigma(f64),
    #[error("invalid canny thresholds: low {low} must be positive and below high {high}")]
    InvalidThresholds { low: f64, high: f64 },
    #[error("negative simplification epsilon {0}")]
    NegativeEpsilon(f64),
    #[error("polygon needs at least {needed} vertices, got {got}")]
    TooFewVertices { needed: usize, got: usize },
    #[error("marker detection failed")]
    DetectionFailed,
    #[error("degenerate quad: {0}")]
    DegenerateQuad(&'static str),
    #[error("midpoints coincide")]
    CoincidentPoints,
    #[error("marker leaves the {size}x{size} frame at {angle_deg} degrees")]
    MarkerOutOfBounds { angle_deg: f64, size: usize },
    #[error("invalid scene: {0}")]
    InvalidScene(String),
    #[error("shift ({dx}, {dy}) exceeds a quarter of the image side")]
    ShiftTooLarge { dx: i32, dy: i32 },
    #[error("batch {0} does not occur in the manifest")]
    UnknownBatch(u32),
    #[error("value {value} outside [{min}, {max}]")]
    OutOfRange { value: f64, min: f64, max: f64 },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("empty dataset")]
    EmptyDataset,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("empty input")]
    Empty,
    #[error("non-finite loss at epoch {0}")]
    NonFiniteLoss(usize),
    #[error("model format mismatch: {0}")]
    VersionMismatch(String),
    #[error("checksum mismatch: stored {stored:08x}, computed {computed:08x}")]
    ChecksumMismatch { stored: u32, computed: u32 },
}

impl Error {
    /// Stable machine-readable tag, used in `error=<tag>` CLI lines.
    pub fn tag(&self) -> &'static str {
        match self {
            Error::FileNotFound(_) => "file_not_found",
            Error::UnsupportedFormat(_) => "unsupported_format",
            Error::CorruptData(_) => "corrupt_data",
            Error::Io(_) => "io_failure",
            Error::KernelTooLarge { .. } => "kernel_too_large",
            Error::InvalidSigma(_) => "invalid_sigma",
            Error::InvalidThresholds { .. } => "invalid_thresholds",
            Error::NegativeEpsilon(_) => "negative_epsilon",
            Error::TooFewVertices { .. } => "too_few_vertices",
            Error::DetectionFailed => "detection_failed",
            Error::DegenerateQuad(_) => "degenerate_quad",
            Error::CoincidentPoints => "coincident_points",
            Error::MarkerOutOfBounds { .. } => "marker_out_of_bounds",
            Error::InvalidScene(_) => "invalid_scene",
            Error::ShiftTooLarge { .. } => "shift_too_large",
            Error::UnknownBatch(_) => "unknown_batch",
            Error::OutOfRange { .. } => "out_of_range",
            Error::Parse(_) => "parse_error",
            Error::InvalidConfig(_) => "invalid_config",
            Error::EmptyDataset => "empty_dataset",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::LengthMismatch(..) => "length_mismatch",
            Error::Empty => "empty",
            Error::NonFiniteLoss(_) => "non_finite_loss",
            Error::VersionMismatch(_) => "version_mismatch",
            Error::ChecksumMismatch { .. } => "checksum_mismatch",
        }
    }

    /// Stable integer code (0 is reserved for success).
    pub fn code(&self) -> i32 {
        match self {
            Error::FileNotFound(_) => 1,
            Error::UnsupportedFormat(_) => 2,
            Error::CorruptData(_) => 3,
            Error::Io(_) => 4,
            Error::KernelTooLarge { .. } => 5,
            Error::InvalidSigma(_) => 6,
            Error::InvalidThresholds { .. } => 7,
            Error::NegativeEpsilon(_) => 8,
            Error::TooFewVertices { .. } => 9,
            Error::DetectionFailed => 10,
            Error::DegenerateQuad(_) => 11,
            Error::CoincidentPoints => 12,
            Error::MarkerOutOfBounds { .. } => 13,
            Error::InvalidScene(_) => 14,
            Error::ShiftTooLarge { .. } => 15,
            Error::UnknownBatch(_) => 16,
            Error::OutOfRange { .. } => 17,
            Error::Parse(_) => 18,
            Error::InvalidConfig(_) => 19,
            Error::EmptyDataset => 20,
            Error::DimensionMismatch { .. } => 21,
            Error::LengthMismatch(..) => 22,
            Error::Empty => 23,
            Error::NonFiniteLoss(_) => 24,
            Error::VersionMismatch(_) => 25,
            Error::ChecksumMismatch { .. } => 26,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
