use alloc::string::String;

/// Errors raised by the scaling-law routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An argument lies outside the domain of the law being evaluated.
    #[error("domain error: {0}")]
    Domain(String),
    /// A simulator or search was configured in a way it cannot run.
    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

macro_rules! domain {
    ($($arg:tt)*) => {
        $crate::Error::Domain(::alloc::format!($($arg)*))
    };
}

macro_rules! config {
    ($($arg:tt)*) => {
        $crate::Error::Config(::alloc::format!($($arg)*))
    };
}

pub(crate) use config;
pub(crate) use domain;
