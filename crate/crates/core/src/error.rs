use alloc::boxed::Box;
use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    /// A filtering normalizer fell below the underflow floor.
    #[error("zero probability for symbol {symbol} at position {position}")]
    ZeroProbability { position: usize, symbol: usize },

    /// A probability evaluated below `-tol` (negative probability problem).
    #[error("negative probability {probability:e} for symbol {symbol} at position {position}")]
    NegativeProbability {
        position: usize,
        symbol: usize,
        probability: f64,
    },

    #[error("invalid model: {0}")]
    Validity(String),

    #[error("symbol {symbol} out of range for alphabet of size {alphabet}")]
    SymbolOutOfRange { symbol: usize, alphabet: usize },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("enumeration of {requested} sequences exceeds the limit of {limit}")]
    Resource { requested: u128, limit: u128 },

    #[error("similarity transform is singular: {0}")]
    Transform(String),

    /// The retraction's 2n×2n system is too ill-conditioned to solve.
    #[error("retraction system is ill-conditioned (condition number {condition:e})")]
    Step { condition: f64 },

    #[error("projection onto the Stiefel manifold failed: {0}")]
    Projection(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("no model assigns nonzero probability to the sequence")]
    Unclassifiable,

    #[error("trajectory error: {0}")]
    Trajectory(String),

    #[error("sequence {sequence}: {source}")]
    InSequence { sequence: usize, source: Box<Error> },

    #[error("epoch {epoch}, batch {batch}: {source}")]
    Training {
        epoch: usize,
        batch: usize,
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn in_sequence(self, sequence: usize) -> Error {
        Error::InSequence {
            sequence,
            source: Box::new(self),
        }
    }

    /// Re-stamps the position of a step-level error raised inside a sequence.
    pub(crate) fn at_position(self, position: usize) -> Error {
        match self {
            Error::ZeroProbability { symbol, .. } => Error::ZeroProbability { position, symbol },
            Error::NegativeProbability {
                symbol, probability, ..
            } => Error::NegativeProbability {
                position,
                symbol,
                probability,
            },
            other => other,
        }
    }

    /// True when the innermost cause is a zero-probability event.
    pub fn is_zero_probability(&self) -> bool {
        match self {
            Error::ZeroProbability { .. } => true,
            Error::InSequence { source, .. } | Error::Training { source, .. } => source.is_zero_probability(),
            _ => false,
        }
    }
}
