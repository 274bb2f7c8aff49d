use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Parse(String),
    #[error("{message}")]
    Validation { field: Option<String>, message: String },
    #[error(transparent)]
    Module(#[from] latticesir::Error),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn invalid(field: &str, message: impl Into<String>) -> Self {
        CliError::Validation { field: Some(field.to_string()), message: message.into() }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Validation { .. } => 3,
            CliError::Module(_) | CliError::Io(_) => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Parse(_) => "ParseError",
            CliError::Validation { .. } => "ValidationError",
            CliError::Module(_) => "ModuleError",
            CliError::Io(_) => "IoError",
        }
    }

    pub fn report(&self) -> ErrorReport {
        let field = match self {
            CliError::Validation { field, .. } => field.clone(),
            _ => None,
        };
        ErrorReport {
            error: ErrorBody {
                kind: self.kind().to_string(),
                message: self.to_string(),
                field,
                exit_code: self.exit_code(),
            },
        }
    }
}

/// Shape of the JSON written to stderr on failure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub error: ErrorBody,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub kind: String,
    pub message: String,
    pub field: Option<String>,
    pub exit_code: i32,
}
