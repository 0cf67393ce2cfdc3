//! Pipeline error type with the exit-code split the CLI contract needs:
//! configuration problems exit 2, everything else exits 1.

use std::fmt;

#[derive(Debug)]
pub enum CliError {
    /// Bad configuration key, value, or combination (exit code 2).
    Config(String),
    /// A data file did not match the expected format.
    Format {
        file: String,
        line: Option<usize>,
        msg: String,
    },
    /// Filesystem failure.
    Io {
        path: String,
        source: std::io::Error,
    },
    /// Error escalated from the decoding core.
    Core(corrnet_core::Error),
    /// A pipeline stage failed; carries the stage name.
    Stage {
        stage: &'static str,
        source: Box<CliError>,
    },
}

pub type Result<T> = std::result::Result<T, CliError>;

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "config error: {msg}"),
            CliError::Format { file, line, msg } => match line {
                Some(line) => write!(f, "format error: {file}:{line}: {msg}"),
                None => write!(f, "format error: {file}: {msg}"),
            },
            CliError::Io { path, source } => write!(f, "io error: {path}: {source}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Stage { stage, source } => write!(f, "stage {stage}: {source}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<corrnet_core::Error> for CliError {
    fn from(e: corrnet_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn format(file: impl Into<String>, line: Option<usize>, msg: impl Into<String>) -> Self {
        CliError::Format {
            file: file.into(),
            line,
            msg: msg.into(),
        }
    }

    pub fn in_stage(self, stage: &'static str) -> Self {
        CliError::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Process exit code for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Stage { source, .. } => source.exit_code(),
            _ => 1,
        }
    }
}
