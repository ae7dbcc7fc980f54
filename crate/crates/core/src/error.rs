use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A row or field could not be read at all.
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Input was readable but breaks a data invariant.
    #[error("{0}")]
    Validation(String),

    /// A numeric precondition of an operation does not hold.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("no fixations to build a map from")]
    EmptyInput,

    #[error("no kernel mass falls inside the {width}x{height} grid")]
    NoMassInGrid { width: usize, height: usize },

    #[error("insufficient data: {0}")]
    Insufficient(String),

    #[error("zero variance in {0}")]
    ZeroVariance(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    /// True for errors caused by the content of input files rather than by
    /// the computation itself.
    pub fn is_input_error(&self) -> bool {
        matches!(self, Error::Parse { .. } | Error::Validation(_) | Error::Io(_))
    }
}
