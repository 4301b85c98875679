use std::fmt;

use bugrank::corpus::CorpusError;
use bugrank::experiment::ExperimentError;
use bugrank::graph::GraphError;

/// An error with its process exit code: 2 for bad input or configuration, 1 for everything else.
#[derive(Debug)]
pub struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    pub fn user(message: impl fmt::Display) -> Self {
        Self {
            code: 2,
            message: message.to_string(),
        }
    }

    pub fn internal(message: impl fmt::Display) -> Self {
        Self {
            code: 1,
            message: message.to_string(),
        }
    }

    pub fn code(&self) -> u8 {
        self.code
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        CliError::user(e)
    }
}

impl From<GraphError> for CliError {
    fn from(e: GraphError) -> Self {
        match e {
            GraphError::NonConvergence(_) => CliError::internal(e),
            _ => CliError::user(e),
        }
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Divergence { .. }
            | ExperimentError::Model(_)
            | ExperimentError::Numerics(_)
            | ExperimentError::MaskMismatch(_) => CliError::internal(e),
            ExperimentError::Graph(g) => g.into(),
            _ => CliError::user(e),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::user(e)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::internal(e)
    }
}
