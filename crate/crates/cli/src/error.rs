use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] dbar_core::Error),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn config(key: &str, reason: impl std::fmt::Display) -> Self {
        CliError::Config(format!("{key}: {reason}"))
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// Core config errors get the section name in front of the field.
    pub fn prefixed(section: &str, e: dbar_core::Error) -> Self {
        match e {
            dbar_core::Error::Config { field, reason } => CliError::config(&format!("{section}.{field}"), reason),
            other => CliError::Core(other),
        }
    }

    /// 2 for configuration and input-format problems, 3 for numerical
    /// failures, 1 for I/O.
    pub fn exit_code(&self) -> i32 {
        use dbar_core::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Core(E::Config { .. } | E::FieldFormat(_) | E::GridMismatch(_) | E::IncompatibleHomotopy(_)) => 2,
            CliError::Core(_) => 3,
            CliError::Io { .. } => 1,
        }
    }
}
