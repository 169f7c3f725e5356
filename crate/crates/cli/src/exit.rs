use std::process::ExitCode;

use wiretap_core::Error as CoreError;

/// Exit codes: 0 ok, 1 input error, 2 quality flag, 3 internal error.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0:#}")]
    Input(anyhow::Error),
    /// The command finished and wrote its output, but a check failed.
    #[error("{0}")]
    Quality(String),
    #[error("internal error: {0:#}")]
    Internal(anyhow::Error),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 1,
            CliError::Quality(_) => 2,
            CliError::Internal(_) => 3,
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.code())
    }

    /// Core errors caused by the caller's data are input errors; the rest
    /// point at a numerical failure.
    pub fn from_core(e: CoreError) -> Self {
        match e {
            CoreError::NonPositiveDefiniteNoise { .. }
            | CoreError::DimensionMismatch(_)
            | CoreError::NotSymmetric(_)
            | CoreError::NotPositiveSemidefinite(_)
            | CoreError::NonFinite
            | CoreError::SingularPerturbedGain { .. }
            | CoreError::OrderViolation(_)
            | CoreError::InvalidTriple(_)
            | CoreError::PowerExceeded { .. }
            | CoreError::InfeasibleR0 { .. }
            | CoreError::DimensionTooLarge { .. }
            | CoreError::InvalidParameter(_) => CliError::Input(e.into()),
            CoreError::NonPositiveResult(_) | CoreError::HypothesisViolated(_) => CliError::Internal(e.into()),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError::from_core(e)
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Tags a fallible step as reading user input.
pub trait InputContext<T> {
    fn input(self) -> CliResult<T>;
}

impl<T> InputContext<T> for anyhow::Result<T> {
    fn input(self) -> CliResult<T> {
        self.map_err(CliError::Input)
    }
}

/// Tags a fallible step as internal (output writing, serialization).
pub trait InternalContext<T> {
    fn internal(self) -> CliResult<T>;
}

impl<T, E: Into<anyhow::Error>> InternalContext<T> for Result<T, E> {
    fn internal(self) -> CliResult<T> {
        self.map_err(|e| CliError::Internal(e.into()))
    }
}
