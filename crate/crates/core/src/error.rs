use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("base must be >= 2")]
    InvalidBase(u64),

    #[error("{0}")]
    Domain(String),

    #[error("{what}: requested {requested} exceeds cap {cap}")]
    ResourceCap {
        what: &'static str,
        requested: u128,
        cap: u128,
    },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn cap(what: &'static str, requested: impl Into<u128>, cap: impl Into<u128>) -> Self {
        Error::ResourceCap {
            what,
            requested: requested.into(),
            cap: cap.into(),
        }
    }
}
