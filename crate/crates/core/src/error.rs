use thiserror::Error;

/// Errors returned by the library.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// An argument violated the operation's preconditions.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// The configuration is valid but too large for the requested operation.
    #[error("unsupported configuration: {0}")]
    UnsupportedConfiguration(String),
}

pub type Result<T> = std::result::Result<T, Error>;

macro_rules! invalid {
    ($($arg:tt)*) => {
        $crate::error::Error::InvalidArgument(format!($($arg)*))
    };
}

macro_rules! unsupported {
    ($($arg:tt)*) => {
        $crate::error::Error::UnsupportedConfiguration(format!($($arg)*))
    };
}

pub(crate) use invalid;
pub(crate) use unsupported;
