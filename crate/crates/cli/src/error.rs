use std::path::PathBuf;

/// Errors raised by the command-line layer.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("spec parse error at `{path}` (line {line}, column {column}): {message}")]
    Parse { path: String, line: usize, column: usize, message: String },
    #[error("invalid spec: {0}")]
    Invalid(String),
    #[error("invalid arguments: {0}")]
    Arguments(String),
    #[error(transparent)]
    Core(#[from] adchart_core::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    /// Exit code: 2 for a failed mathematical hypothesis, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_hypothesis_failure() => 2,
            _ => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Io { .. } => "io",
            CliError::Parse { .. } => "parse",
            CliError::Invalid(_) => "invalid_spec",
            CliError::Arguments(_) => "arguments",
            CliError::Core(e) if e.is_hypothesis_failure() => "hypothesis_failure",
            CliError::Core(_) => "core",
            CliError::Json(_) => "json",
            CliError::Csv(_) => "csv",
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
