use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("decode error: {0}")]
    Decode(String),

    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),

    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("degenerate chromaticity: X + 15Y + 3Z = {0}")]
    DegenerateChromaticity(f64),

    #[error("extraction error ({descriptor}): {reason}")]
    Extraction {
        descriptor: &'static str,
        reason: String,
    },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("comparison error: {0}")]
    Comparison(String),

    #[error("store format error at byte {offset}: {reason}")]
    StoreFormat { offset: u64, reason: String },

    #[error("duplicate image id {0}")]
    DuplicateKey(u64),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("descriptor mismatch: expected {expected}, got {actual}")]
    DescriptorMismatch {
        expected: &'static str,
        actual: &'static str,
    },

    #[error("no candidate instances to search")]
    EmptyStore,

    #[error("insufficient labeled instances: need {needed}, have {available}")]
    InsufficientInstances { needed: usize, available: usize },

    #[error("undefined measure: {0}")]
    UndefinedMeasure(String),

    #[error("stratification error: {0}")]
    Stratification(String),

    #[error("degenerate projection: {0}")]
    DegenerateProjection(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn extraction(descriptor: &'static str, reason: impl Into<String>) -> Self {
        Error::Extraction {
            descriptor,
            reason: reason.into(),
        }
    }
}
