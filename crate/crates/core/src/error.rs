use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: `{field}` {reason}")]
    InvalidConfig { field: String, reason: String },

    #[error("failed to factorize correlation matrix of link (ap {ap}, ue {ue}): {reason}")]
    Factorization {
        ap: usize,
        ue: usize,
        reason: String,
    },

    #[error("{what} is not positive definite (ap {ap}, ue {ue:?})")]
    Solve {
        what: &'static str,
        ap: usize,
        ue: Option<usize>,
    },

    #[error("LSFD weight vector of ue {0} is zero")]
    ZeroWeights(usize),

    #[error("config parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
