use thiserror::Error;

use crate::numerics::NumericsError;

/// Errors raised by the model, likelihood, estimation, simulation and
/// prediction layers.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("subject {subject}: {message}")]
    Data { subject: String, message: String },
    #[error("evaluation error: {0}")]
    Evaluation(String),
    #[error("subject {subject}: {source}")]
    Subject {
        subject: String,
        #[source]
        source: Box<Error>,
    },
    #[error("ill-conditioned matrix: {0}")]
    Conditioning(String),
    #[error("rank-deficient design; collinear columns: {}", columns.join(", "))]
    Rank { columns: Vec<String> },
    #[error("unavailable: {0}")]
    Unavailable(String),
    #[error("sampler failure: {0}")]
    Sampler(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn data(subject: &str, message: impl Into<String>) -> Self {
        Error::Data {
            subject: subject.to_string(),
            message: message.into(),
        }
    }

    pub(crate) fn in_subject(self, subject: &str) -> Self {
        match self {
            e @ (Error::Subject { .. } | Error::Data { .. }) => e,
            e => Error::Subject {
                subject: subject.to_string(),
                source: Box::new(e),
            },
        }
    }
}
