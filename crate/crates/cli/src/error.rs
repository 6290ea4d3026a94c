use std::path::PathBuf;

use thiserror::Error;

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read scenario {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("scenario schema error: {0}")]
    Schema(String),
    #[error("command '{requested}' does not match the scenario's command '{declared}'")]
    CommandMismatch { requested: String, declared: String },
    #[error("{0}")]
    Core(#[from] robagg_core::Error),
    #[error("cannot write output: {0}")]
    Write(String),
}

impl CliError {
    pub fn schema(msg: impl Into<String>) -> Self {
        Self::Schema(msg.into())
    }

    /// Process exit code: 2 for malformed input, 3 for numerical failure,
    /// 4 for an empty feasible set, 1 for output errors.
    pub fn exit_code(&self) -> i32 {
        use robagg_core::Error as E;
        match self {
            Self::Read { .. } | Self::Schema(_) | Self::CommandMismatch { .. } => 2,
            Self::Write(_) => 1,
            Self::Core(e) => match e {
                E::EmptyIntersection { .. } | E::AbsoluteContinuityFailure => 4,
                E::SolverDiverged(_)
                | E::NoConvergence { .. }
                | E::BracketFailure
                | E::NoRoot
                | E::NonConcaveDetected
                | E::Degenerate(_) => 3,
                _ => 2,
            },
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::Write(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Write(e.to_string())
    }
}
