use std::io;
use std::path::PathBuf;

/// Errors of the experiment layer, each mapped to a process exit code.
#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("config error: {0}")]
    Config(String),

    #[error("{0}")]
    Core(#[from] eulerbound_core::Error),

    /// Not enough data to make the requested statistical statement.
    #[error("statistics error: {0}")]
    Statistics(String),

    #[error("io error at {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

impl AppError {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }

    /// 1 io, 2 config, 3 numeric or tolerance, 4 statistical power.
    pub fn exit_code(&self) -> i32 {
        use eulerbound_core::Error as E;
        match self {
            Self::Io { .. } => 1,
            Self::Config(_) => 2,
            Self::Core(E::InvalidArgument(_) | E::InvalidModel(_)) => 2,
            Self::Core(_) => 3,
            Self::Statistics(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, AppError>;

macro_rules! config_err {
    ($($arg:tt)*) => {
        $crate::error::AppError::Config(format!($($arg)*))
    };
}
pub(crate) use config_err;
