use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    /// A named precondition of an operation does not hold.
    #[error("precondition violated: {0}")]
    Precondition(&'static str),
    #[error("anchor {0} is not a point of the set")]
    AnchorNotInSet(String),
    #[error("frequency of empty patch undefined (infinite count)")]
    EmptyPatch,
    #[error("set not separated at resolution {0}")]
    NotSeparated(u32),
    #[error("{0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
