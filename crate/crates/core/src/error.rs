use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("truncated input at byte {offset}: needed {needed} more bytes")]
    Truncated { offset: usize, needed: usize },

    #[error("invalid header field `{field}` at byte {offset}: {value:?}")]
    Field {
        field: &'static str,
        offset: usize,
        value: String,
    },

    #[error("non-ASCII byte 0x{byte:02x} in header at byte {offset}")]
    NonAscii { offset: usize, byte: u8 },

    #[error("bad calibration for channel `{channel}`: {reason}")]
    Calibration { channel: String, reason: String },

    #[error("channel `{channel}` sample {index}: value {value} outside [{min}, {max}]")]
    Range {
        channel: String,
        index: usize,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("seizure summary: {0}")]
    Summary(String),

    #[error("invalid seizure interval [{start}, {end}) in `{file}`")]
    Interval { file: String, start: f64, end: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("invalid data: {0}")]
    Data(String),

    #[error("leakage gate: {0}")]
    Leakage(String),

    #[error("metric undefined: {0}")]
    Undefined(String),

    #[error("non-finite loss for sequence {index}")]
    NonFiniteLoss { index: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
