use core::fmt;

/// Errors raised by the exit pipeline and its building blocks.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Buffer length does not match the declared dimensions.
    BadDimensions { width: usize, height: usize, len: usize },
    /// Two images that must share a size do not.
    DimensionMismatch { expected: (usize, usize), actual: (usize, usize) },
    /// Row span is empty or leaves the image.
    InvalidMask { row_start: usize, row_end: usize, height: usize },
    /// Feature extraction needs at least 16×16 pixels.
    ImageTooSmall { width: usize, height: usize },
    /// Descriptor window reaches past the image border.
    WindowOutOfBounds,
    /// Descriptor window has no gradient energy.
    FlatNeighborhood,
    /// Too few valid depth pixels to take a row median.
    InsufficientDepth { row: usize, valid: usize, width: usize },
    /// The visible headland is shorter than the robot.
    HeadlandTooShort { d_fov: f64, length: f64 },
    /// An operation was called in the wrong pipeline phase.
    PhaseViolation { operation: &'static str, phase: &'static str },
    /// A stage did not halt within the configured number of frames.
    FrameLimit { stage: u8, frames: usize },
    /// A configuration value violates its invariant.
    InvalidConfig(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::BadDimensions { width, height, len } => {
                write!(f, "buffer of {len} values does not fit {width}x{height}")
            }
            Error::DimensionMismatch { expected, actual } => write!(
                f,
                "dimension mismatch: expected {}x{}, got {}x{}",
                expected.0, expected.1, actual.0, actual.1
            ),
            Error::InvalidMask { row_start, row_end, height } => {
                write!(f, "invalid crop rows {row_start}..{row_end} for height {height}")
            }
            Error::ImageTooSmall { width, height } => {
                write!(f, "image {width}x{height} is smaller than 16x16")
            }
            Error::WindowOutOfBounds => f.write_str("descriptor window leaves the image"),
            Error::FlatNeighborhood => f.write_str("descriptor window has zero gradient"),
            Error::InsufficientDepth { row, valid, width } => {
                write!(f, "row {row} has only {valid} of {width} valid depth pixels")
            }
            Error::HeadlandTooShort { d_fov, length } => write!(
                f,
                "headland too short: visible span {d_fov:.3} m < robot length {length:.3} m"
            ),
            Error::PhaseViolation { operation, phase } => {
                write!(f, "{operation} is not allowed in phase {phase}")
            }
            Error::FrameLimit { stage, frames } => {
                write!(f, "stage {stage} did not halt within {frames} frames")
            }
            Error::InvalidConfig(msg) => write!(f, "invalid configuration: {msg}"),
        }
    }
}

impl core::error::Error for Error {}
