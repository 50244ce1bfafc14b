//! Process exit codes and the error type that carries them.

use std::fmt;

use kentropy::Error;

/// Exit status of the `kentropy` binary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Ok = 0,
    Invariant = 1,
    Schema = 2,
    Dimension = 3,
    NotResolvable = 4,
    TypicalityFloor = 5,
    UnknownModel = 6,
    ZeroMinTypicality = 7,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: ExitCode,
    pub message: String,
}

impl CliError {
    pub fn new(code: ExitCode, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    pub fn schema(message: impl Into<String>) -> Self {
        Self::new(ExitCode::Schema, message)
    }

    pub fn dimension(message: impl Into<String>) -> Self {
        Self::new(ExitCode::Dimension, message)
    }

    pub fn invariant(message: impl Into<String>) -> Self {
        Self::new(ExitCode::Invariant, message)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::DimensionMismatch { .. } => ExitCode::Dimension,
            Error::NotResolvable { .. } | Error::PmfNotResolvable(_) => ExitCode::NotResolvable,
            Error::TypicalityTooSmall { .. } => ExitCode::TypicalityFloor,
            Error::ZeroMinTypicality(_) => ExitCode::ZeroMinTypicality,
            Error::InvariantViolation(_) | Error::Sampler { .. } | Error::ZeroProbabilityObservation(_) => {
                ExitCode::Invariant
            }
            Error::InvalidKernel(_)
            | Error::InvalidPmf(_)
            | Error::InvalidLabels(_)
            | Error::InvalidPermutation(_)
            | Error::Domain(_)
            | Error::EmptyClass(_)
            | Error::MetricViolation(_)
            | Error::EpsilonNotLowerBound { .. } => ExitCode::Schema,
        };
        Self::new(code, e.to_string())
    }
}
