use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("shape mismatch: expected {expected} values, got {actual}")]
    Shape { expected: usize, actual: usize },

    #[error("singular system: pivot {pivot:e} at row {row} of {size}")]
    Singular { row: usize, size: usize, pivot: f64 },

    #[error("non-finite value produced by {0}")]
    NonFinite(&'static str),

    #[error("reconstruction failed at {phase} step {step}: {source}")]
    Reconstruction {
        phase: &'static str,
        step: usize,
        #[source]
        source: alloc::boxed::Box<Error>,
    },
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }
}

/// Returns a parameter error built with `format!` unless `cond` holds.
macro_rules! ensure {
    ($cond:expr, $($arg:tt)+) => {
        if !$cond {
            return Err($crate::error::Error::Parameter(alloc::format!($($arg)+)));
        }
    };
}
pub(crate) use ensure;
