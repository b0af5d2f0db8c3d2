use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid config: {0}")]
    Config(String),

    #[error("{op} failed: {source}")]
    Numerical {
        op: &'static str,
        #[source]
        source: cavmag_core::Error,
    },

    #[error("{oracle} oracle disagrees with the closed form: {max:e} > {threshold:e}")]
    OracleMismatch {
        oracle: &'static str,
        max: f64,
        threshold: f64,
    },

    #[error("{}: {}", .0.display(), .1)]
    Io(PathBuf, std::io::Error),

    #[error("{}: {}", .0.display(), .1)]
    Csv(PathBuf, csv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) => 2,
            Self::Numerical { .. } | Self::OracleMismatch { .. } => 3,
            Self::Io(..) | Self::Csv(..) => 1,
        }
    }
}

/// Tags a core error with the operation that raised it.
pub trait Op<T> {
    fn op(self, op: &'static str) -> Result<T, CliError>;
}

impl<T> Op<T> for cavmag_core::Result<T> {
    fn op(self, op: &'static str) -> Result<T, CliError> {
        self.map_err(|source| CliError::Numerical { op, source })
    }
}
