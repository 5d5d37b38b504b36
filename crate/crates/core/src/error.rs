use alloc::string::String;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An argument lies outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),
    /// A target value lies outside the range that can be inverted.
    #[error("range error: {0}")]
    Range(String),
    /// Malformed argument (sizes, grids, orderings).
    #[error("invalid argument: {0}")]
    Argument(String),
    /// A walk or Bernstein specification violates its invariants.
    #[error("invalid specification: {0}")]
    Spec(String),
    /// The requested table would exceed the configured memory cap.
    #[error("resource limit: {0}")]
    Resource(String),
    /// An argument lies outside the regime where an asymptotic formula applies.
    #[error("regime error: {0}")]
    Regime(String),
    /// A numerical procedure failed to converge or hit a degenerate point.
    #[error("numeric error: {0}")]
    Numeric(String),
}

pub type Result<T> = core::result::Result<T, Error>;

macro_rules! bail {
    ($kind:ident, $($arg:tt)*) => {
        return Err($crate::error::Error::$kind(alloc::format!($($arg)*)))
    };
}
pub(crate) use bail;
