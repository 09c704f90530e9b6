use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// A coefficient or a simulated state stopped being finite.
    #[error("non-finite value{}: {detail}", sample.map(|s| alloc::format!(" in sample {s}")).unwrap_or_default())]
    NonFinite { sample: Option<u64>, detail: String },

    #[error("factorization failed: {0}")]
    Factorization(String),

    /// Quadrature or integrator did not reach its tolerance.
    #[error("tolerance not reached: {0}")]
    Tolerance(String),

    /// A truncated grid loses more probability mass than allowed.
    #[error("grid truncation: {0}")]
    Truncation(String),
}

pub type Result<T> = core::result::Result<T, Error>;

macro_rules! bail {
    ($variant:ident, $($arg:tt)*) => {
        return Err($crate::Error::$variant(alloc::format!($($arg)*)))
    };
}
pub(crate) use bail;
