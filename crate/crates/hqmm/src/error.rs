use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] hqmm_core::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("invalid arguments: {0}")]
    Usage(String),
}

impl Error {
    /// Stable machine-readable category.
    pub fn kind(&self) -> &'static str {
        use hqmm_core::Error as C;
        match self {
            Error::Core(e) => match e {
                C::Dimension(_) => "dimension",
                C::ZeroProbability { .. } => "zero_probability",
                C::NegativeProbability { .. } => "negative_probability",
                C::Validity(_) => "validity",
                C::SymbolOutOfRange { .. } => "symbol_out_of_range",
                C::Input(_) => "input",
                C::Resource { .. } => "resource",
                C::Transform(_) => "transform",
                C::Step { .. } => "step",
                C::Projection(_) => "projection",
                C::Config(_) => "config",
                C::Unclassifiable => "unclassifiable",
                C::Trajectory(_) => "trajectory",
                C::InSequence { .. } => "in_sequence",
                C::Training { .. } => "training",
            },
            Error::Io { .. } => "io",
            Error::Parse { .. } => "parse",
            Error::Format { .. } => "format",
            Error::Usage(_) => "usage",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        Error::Format {
            path: path.into(),
            message: message.to_string(),
        }
    }
}
