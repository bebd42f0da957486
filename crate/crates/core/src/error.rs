use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value is out of range or inconsistent.
    #[error("invalid configuration `{field}`: {reason}")]
    Config { field: String, reason: String },

    /// An argument lies outside the domain of a mathematical function.
    #[error("domain error: {0}")]
    Domain(String),

    /// A channel realization or variance profile cannot be used.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// The requested operating point cannot be reached.
    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("root solver failed: {0}")]
    Solver(String),

    #[error("failed to parse scenario: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// True for errors caused by the scenario rather than by the run itself.
    pub fn is_config_error(&self) -> bool {
        matches!(self, Error::Config { .. } | Error::Parse(_))
    }
}
