//! Error type shared by all subcommands, with one exit code per error class.

use cbi::{ConformalError, DpcError, MetricError, ScoringError, SynthError, ThinningError};

/// Exit codes: 0 success, 2 usage (from clap), then one code per class.
pub const EXIT_IO: i32 = 3;
pub const EXIT_FORMAT: i32 = 4;
pub const EXIT_VALIDATION: i32 = 5;
pub const EXIT_NO_CANDIDATE: i32 = 6;
pub const EXIT_FILTER_VIOLATION: i32 = 7;
pub const EXIT_INFEASIBLE: i32 = 8;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Format(String),
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    NoCandidate(String),
    #[error("{0}")]
    FilterViolation(String),
    #[error("{0}")]
    Infeasible(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => EXIT_IO,
            CliError::Format(_) => EXIT_FORMAT,
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::NoCandidate(_) => EXIT_NO_CANDIDATE,
            CliError::FilterViolation(_) => EXIT_FILTER_VIOLATION,
            CliError::Infeasible(_) => EXIT_INFEASIBLE,
        }
    }
}

impl From<cbi::io::IoError> for CliError {
    fn from(e: cbi::io::IoError) -> Self {
        use cbi::io::IoError;
        match e {
            IoError::Io { .. } => CliError::Io(e.to_string()),
            IoError::FormatError { .. } => CliError::Format(e.to_string()),
            IoError::ValidationError(_) | IoError::InvalidSplit(_) => {
                CliError::Validation(e.to_string())
            }
            IoError::Scoring(inner) => inner.into(),
        }
    }
}

impl From<ScoringError> for CliError {
    fn from(e: ScoringError) -> Self {
        match e {
            ScoringError::NoCandidate => CliError::NoCandidate(e.to_string()),
            ScoringError::InvalidSubsample { .. } => CliError::Infeasible(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<MetricError> for CliError {
    fn from(e: MetricError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<ConformalError> for CliError {
    fn from(e: ConformalError) -> Self {
        match e {
            ConformalError::FilterViolation => CliError::FilterViolation(e.to_string()),
            ConformalError::NoCandidate => CliError::NoCandidate(e.to_string()),
            ConformalError::Scoring(inner) => inner.into(),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<DpcError> for CliError {
    fn from(e: DpcError) -> Self {
        match e {
            DpcError::InvalidModeCount { .. } => CliError::Infeasible(e.to_string()),
            DpcError::ParseError { .. } => CliError::Format(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<ThinningError> for CliError {
    fn from(e: ThinningError) -> Self {
        match e {
            ThinningError::BudgetInfeasible { .. } => CliError::Infeasible(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Format(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
