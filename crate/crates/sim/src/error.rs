use std::path::PathBuf;

use thiserror::Error;

use crate::config::Method;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("config error: {0}")]
    Config(String),

    #[error("{method} at {snr_db} dB: {source}")]
    Design {
        method: Method,
        snr_db: f64,
        #[source]
        source: twr_core::Error,
    },

    #[error(transparent)]
    Core(#[from] twr_core::Error),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {msg}", path.display())]
    Format { path: PathBuf, msg: String },
}

impl SimError {
    /// Process exit status: 2 for configuration problems (including designs
    /// that do not apply to the configured scenario), 3 for numerical
    /// failures, 1 for I/O.
    pub fn exit_code(&self) -> i32 {
        let core = match self {
            SimError::Config(_) => return 2,
            SimError::Io { .. } | SimError::Format { .. } => return 1,
            SimError::Design { source, .. } => source,
            SimError::Core(e) => e,
        };
        match core {
            twr_core::Error::WrongScenarioKind(_)
            | twr_core::Error::LengthTooShort { .. }
            | twr_core::Error::InvalidParameter(_)
            | twr_core::Error::DimensionMismatch(_) => 2,
            _ => 3,
        }
    }
}
