use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument violated an operation's precondition.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// A configuration file or flag combination is unusable.
    #[error("configuration error: {0}")]
    Config(String),

    /// The data cannot support the requested estimate (empty eroded
    /// region, zero quadrature denominator, ...).
    #[error("degenerate estimate: {0}")]
    Degenerate(String),

    #[error("unsupported model: {0}")]
    UnsupportedModel(String),

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("malformed pattern file, line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn degenerate(msg: impl Into<String>) -> Self {
        Error::Degenerate(msg.into())
    }
}
