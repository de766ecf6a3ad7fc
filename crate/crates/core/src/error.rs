use thiserror::Error;

/// Errors raised across the toolkit.
///
/// The harness maps these onto process exit codes: configuration and
/// argument problems exit with 1, numerical and consistency failures with 2.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {what} (expected {expected}, got {got})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("infeasible set: {0}")]
    InfeasibleSet(String),

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("numerical failure: {message} (partial estimate {partial})")]
    NumericalFailure { message: String, partial: f64 },

    #[error("singular linear system at pivot column {0}")]
    Singular(usize),

    #[error("internal consistency check failed: {0}")]
    InternalConsistency(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("transition stream exhausted after {0} samples")]
    StreamExhausted(usize),

    #[error("config error: {0}")]
    Config(String),

    #[error("golden regression failed: {0}")]
    Golden(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code used by the command-line runner.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_)
            | Error::DimensionMismatch { .. }
            | Error::InvalidSchedule(_)
            | Error::InfeasibleSet(_)
            | Error::Config(_)
            | Error::Io(_) => 1,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch {
            what,
            expected,
            got,
        });
    }
    Ok(())
}
