use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("raster dimensions must be at least 1x1, got {width}x{height}")]
    EmptyRaster { width: usize, height: usize },
    #[error("raster data length {actual} does not match {width}x{height}x{channels} = {expected}")]
    DataLength {
        width: usize,
        height: usize,
        channels: usize,
        expected: usize,
        actual: usize,
    },
    #[error("expected {expected} channel(s), got {actual}")]
    ChannelCount { expected: usize, actual: usize },
    #[error("non-finite sample {value} at x={x}, y={y}, channel={channel}")]
    NonFinite {
        x: usize,
        y: usize,
        channel: usize,
        value: f64,
    },
    #[error("sample {value} at x={x}, y={y}, channel={channel} is outside [0, 1]")]
    OutOfRange {
        x: usize,
        y: usize,
        channel: usize,
        value: f64,
    },
    #[error("dimension mismatch: expected {expected_width}x{expected_height}, got {width}x{height}")]
    DimensionMismatch {
        expected_width: usize,
        expected_height: usize,
        width: usize,
        height: usize,
    },
    #[error("pyramid depth {requested} is invalid, image supports depths 1..={max}")]
    InvalidDepth { requested: usize, max: usize },
    #[error("expected a {expected} pyramid, got a {actual} pyramid")]
    PyramidKind {
        expected: &'static str,
        actual: &'static str,
    },
    #[error("pyramid shape mismatch at level {level}: {detail}")]
    PyramidShape { level: usize, detail: String },
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("list length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("frame index {k} is outside the window [{start}, {t}]")]
    OutsideWindow { k: usize, start: usize, t: usize },
    #[error("index {index} out of bounds for window of {len}")]
    IndexOutOfBounds { index: usize, len: usize },
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("frame {index}: {source}")]
    Frame {
        index: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn at_frame(self, index: usize) -> Self {
        Error::Frame {
            index,
            source: Box::new(self),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
