use std::path::{Path, PathBuf};

/// Everything a command can fail with.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad configuration value or override.
    #[error("config error at `{key}`: {message}")]
    Config {
        /// Dotted key of the offending value.
        key: String,
        /// What was wrong.
        message: String,
    },
    /// A simulation or analysis step failed.
    #[error("numerical failure: {0}")]
    Numerical(skytex_core::Error),
    /// A curve fit failed.
    #[error("fit failure: {0}")]
    Fit(skytex_core::Error),
    /// Input data do not fit together (lengths, missing bases).
    #[error("inconsistent input: {0}")]
    Input(skytex_core::Error),
    /// Malformed input file.
    #[error("parse error in {path} at record {record}: {message}")]
    Parse {
        /// File being read.
        path: PathBuf,
        /// 1-based line or record number.
        record: u64,
        /// What was wrong.
        message: String,
    },
    /// Filesystem failure.
    #[error("io error on {path}: {source}")]
    Io {
        /// File or directory.
        path: PathBuf,
        /// Underlying error.
        source: std::io::Error,
    },
}

/// Crate result alias.
pub type Result<T> = std::result::Result<T, CliError>;

impl CliError {
    /// Process exit status: 2 config, 3 numerical, 4 fit, 5 io and input.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Numerical(_) => 3,
            CliError::Fit(_) => 4,
            CliError::Input(_) | CliError::Parse { .. } | CliError::Io { .. } => 5,
        }
    }

    /// Short class label used in error messages.
    pub fn class(&self) -> &'static str {
        match self.exit_code() {
            2 => "config",
            3 => "numerical",
            4 => "fit",
            _ => "io",
        }
    }

    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Config { key: key.into(), message: message.into() }
    }

    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }

    pub(crate) fn parse(path: &Path, record: u64, message: impl Into<String>) -> Self {
        CliError::Parse { path: path.to_path_buf(), record, message: message.into() }
    }
}

impl From<skytex_core::Error> for CliError {
    fn from(e: skytex_core::Error) -> Self {
        use skytex_core::Error as E;
        match e {
            E::InvalidParameter { name, reason } => CliError::Config { key: name.to_string(), message: reason },
            E::FitFailure { .. } | E::NoUniquePhase => CliError::Fit(e),
            E::LengthMismatch { .. } | E::IncompleteData { .. } => CliError::Input(e),
            _ => CliError::Numerical(e),
        }
    }
}

/// Attaches a config section to parameter errors raised by the core.
pub(crate) trait InSection<T> {
    fn in_section(self, section: &str) -> Result<T>;
}

impl<T> InSection<T> for skytex_core::Result<T> {
    fn in_section(self, section: &str) -> Result<T> {
        self.map_err(|e| match CliError::from(e) {
            CliError::Config { key, message } => CliError::Config { key: format!("{section}.{key}"), message },
            other => other,
        })
    }
}
