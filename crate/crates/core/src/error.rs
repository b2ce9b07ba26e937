use std::path::PathBuf;

use thiserror::Error;

/// Which operand of a cosine metric had a vanishing norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormOperand {
    Feature,
    WeightColumn,
}

impl std::fmt::Display for NormOperand {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NormOperand::Feature => f.write_str("feature vector"),
            NormOperand::WeightColumn => f.write_str("weight column"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("zero-norm {operand} at index {index} under the normalized classifier")]
    ZeroNorm { operand: NormOperand, index: usize },

    #[error("label {label} out of range for {num_classes} classes")]
    LabelOutOfRange { label: usize, num_classes: usize },

    #[error("at least 2 classes are required, got {0}")]
    TooFewClasses(usize),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("empty {0}")]
    Empty(&'static str),

    #[error("invalid classifier head: {0}")]
    InvalidHead(String),

    #[error("invalid loss: {0}")]
    InvalidLoss(String),

    #[error("unknown bias initialization mode {0} (expected 0..=7)")]
    UnknownBiasInit(u8),

    #[error("invalid sample selection: {0}")]
    InvalidSelection(String),

    #[error("no sample-wise correct samples to report on")]
    NoCorrectSamples,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    Diverged { epoch: usize, batch: usize },

    #[error("{}: line {line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
