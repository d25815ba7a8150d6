use std::path::PathBuf;

use serde::Serialize;

/// Errors of the std layer. Each maps to a process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] stablediff_core::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {msg}")]
    Format { path: PathBuf, msg: String },
    #[error("{0}")]
    Input(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub fn format(path: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        CliError::Format { path: path.into(), msg: msg.into() }
    }

    /// 2 for bad input (files, flags, configuration), 3 for failures of the
    /// computation itself.
    pub fn exit_code(&self) -> i32 {
        use stablediff_core::Error as E;
        match self {
            CliError::Io { .. } | CliError::Format { .. } | CliError::Input(_) | CliError::Json(_) => 2,
            CliError::Core(E::InvalidConfig(_) | E::InvalidRequest(_) | E::InvalidAlpha(_) | E::TooFewSamples { .. }) => 2,
            CliError::Core(_) => 3,
        }
    }

    pub fn kind(&self) -> String {
        match self {
            CliError::Core(e) => format!("{e:?}").split(['(', ' ', '{']).next().unwrap_or("Core").to_string(),
            CliError::Io { .. } => "Io".into(),
            CliError::Format { .. } => "Format".into(),
            CliError::Input(_) => "Input".into(),
            CliError::Json(_) => "Json".into(),
        }
    }

    /// One-line JSON for standard error.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Report<'a> {
            schema: u32,
            error: &'a str,
            message: String,
            exit_code: i32,
        }
        let kind = self.kind();
        serde_json::to_string(&Report { schema: 1, error: &kind, message: self.to_string(), exit_code: self.exit_code() })
            .unwrap_or_else(|_| "{\"schema\":1,\"error\":\"Unknown\"}".into())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
