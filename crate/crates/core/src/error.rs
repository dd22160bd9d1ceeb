use thiserror::Error;

/// Errors raised by the simulation, construction and verification pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside its admissible range. `field` names the offender.
    #[error("invalid parameter `{field}`: {message}")]
    Parameter { field: String, message: String },

    /// A generated path left the positive half-line.
    #[error("path validity: {0}")]
    PathValidity(String),

    /// Inputs do not fit together (grid mismatch, off-grid jump times, length mismatch).
    #[error("structural: {0}")]
    Structural(String),

    /// The requested computation is not available for this model.
    #[error("unsupported: {0}")]
    Capability(String),

    /// A documented precondition of an operation does not hold.
    #[error("precondition: {0}")]
    Precondition(String),

    #[error("config: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parameter {
            field: field.into(),
            message: message.into(),
        }
    }

    /// Short machine-readable tag used in CLI error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parameter { .. } => "parameter",
            Error::PathValidity(_) => "path_validity",
            Error::Structural(_) => "structural",
            Error::Capability(_) => "capability",
            Error::Precondition(_) => "precondition",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
