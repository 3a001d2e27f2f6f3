use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("probability {0} outside [0, 1]")]
    InvalidProbability(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{what}: n = {n} exceeds the size limit {limit}")]
    SizeLimit {
        what: &'static str,
        n: usize,
        limit: usize,
    },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("construction failed: {0}")]
    Construction(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn pre(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    /// True for failures caused by the caller's input rather than by a
    /// construction that ran and did not succeed.
    pub fn is_precondition(&self) -> bool {
        matches!(
            self,
            Error::InvalidProbability(_)
                | Error::InvalidArgument(_)
                | Error::SizeLimit { .. }
                | Error::Parse { .. }
                | Error::Precondition(_)
                | Error::Json(_)
        )
    }
}
