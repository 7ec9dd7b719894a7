use thiserror::Error;

use crate::domain::{MemoryClass, Side};

/// Errors raised by the library. Input problems and resource limits are kept
/// apart from invariant violations so callers can map them to exit codes.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    #[error("{side:?} responder requested {requested:?} history but the view only grants {granted:?}")]
    ViewRestricted {
        side: Side,
        requested: MemoryClass,
        granted: MemoryClass,
    },

    #[error("invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
