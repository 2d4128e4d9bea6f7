use serde_json::json;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("unknown experiment {0:?}")]
    UnknownExperiment(String),
    #[error("guard violation: {0}")]
    Guard(String),
    #[error(transparent)]
    Core(#[from] rough_pdo::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::UnknownExperiment(_) => "unknown-experiment",
            CliError::Guard(_) => "guard",
            CliError::Core(_) => "core",
            CliError::Io(_) => "io",
        }
    }

    /// Machine-readable form printed on a failed invocation.
    pub fn to_json(&self) -> String {
        json!({ "error": self.kind(), "message": self.to_string() }).to_string()
    }
}
