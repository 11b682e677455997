use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A computation would exceed a configured size budget.
    #[error("resource limit: {0}")]
    Resource(String),

    /// An iterative method stopped before reaching its tolerance. `best` is
    /// the last available estimate.
    #[error("no convergence: {message} (best estimate {best})")]
    NonConvergence { message: String, best: f64 },

    /// A theorem-backed or statistical contract failed.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn resource(msg: impl Into<String>) -> Self {
        Error::Resource(msg.into())
    }

    /// Prefixes the message with `context`, keeping the variant (and so the
    /// exit code).
    pub fn context(self, context: impl std::fmt::Display) -> Self {
        match self {
            Error::InvalidArgument(m) => Error::InvalidArgument(format!("{context}: {m}")),
            Error::Resource(m) => Error::Resource(format!("{context}: {m}")),
            Error::NonConvergence { message, best } => Error::NonConvergence {
                message: format!("{context}: {message}"),
                best,
            },
            Error::Contract(m) => Error::Contract(format!("{context}: {m}")),
            Error::Config(m) => Error::Config(format!("{context}: {m}")),
            other => other,
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Contract(_) => 2,
            Error::Resource(_) => 3,
            Error::Config(_) | Error::InvalidArgument(_) => 4,
            _ => 1,
        }
    }
}
