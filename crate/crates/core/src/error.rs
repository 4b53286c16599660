use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A gene value fell outside the embedding table.
    #[error("gene value {gene} out of embedding range (vocab_size {vocab_size})")]
    EmbeddingRange { gene: usize, vocab_size: usize },

    /// Tensor or genome shapes do not agree.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A weights file failed validation.
    #[error("corrupt weights file: {0}")]
    CorruptWeights(String),

    /// Loaded weights cannot serve the target problem.
    #[error("transfer incompatibility: weights support vocab_size {available}, problem requires {required}")]
    TransferIncompatible { available: usize, required: usize },

    /// Training produced a non-finite value.
    #[error("training diverged: non-finite value in {0}")]
    TrainingDivergence(String),

    /// An instance file could not be parsed.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// A genome is too short for the requested operation.
    #[error("degenerate genome: {0}")]
    DegenerateGenome(String),

    /// Invalid configuration value.
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
