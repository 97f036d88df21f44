use std::fmt;
use std::process::ExitCode;

use spherestat::Error;

/// Failure of one subcommand, mapped onto the process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, unreadable or unparsable input.
    Usage(String),
    Network(String),
    /// An estimator or frame operation failed at `stage`.
    Compute { stage: &'static str, message: String },
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Usage(_) => ExitCode::from(2),
            CliError::Network(_) => ExitCode::from(3),
            CliError::Compute { .. } => ExitCode::from(4),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Network(m) => write!(f, "network: {m}"),
            CliError::Compute { stage, message } => write!(f, "{stage} failed: {message}"),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Tags library errors with the pipeline stage they came from.
pub trait Stage<T> {
    /// Errors reading or decoding input become usage errors.
    fn input(self, what: &str) -> CliResult<T>;
    /// Anything else is a computation error at `stage`.
    fn stage(self, stage: &'static str) -> CliResult<T>;
}

impl<T> Stage<T> for spherestat::Result<T> {
    fn input(self, what: &str) -> CliResult<T> {
        self.map_err(|e| CliError::Usage(format!("{what}: {e}")))
    }

    fn stage(self, stage: &'static str) -> CliResult<T> {
        self.map_err(|e| match e {
            Error::Io(_) => CliError::Usage(format!("{stage}: {e}")),
            e => CliError::Compute { stage, message: e.to_string() },
        })
    }
}

impl<T> Stage<T> for std::io::Result<T> {
    fn input(self, what: &str) -> CliResult<T> {
        self.map_err(|e| CliError::Usage(format!("{what}: {e}")))
    }

    fn stage(self, stage: &'static str) -> CliResult<T> {
        self.map_err(|e| CliError::Usage(format!("{stage}: {e}")))
    }
}
