use std::fmt;

/// Failure classes with their process exit codes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CliError {
    /// Reading or writing a file failed (exit 1).
    Io(String),
    /// Invalid flags, config file or input data (exit 2).
    Config(String),
    /// A verification check did not pass (exit 3).
    Verification(String),
    /// A numerical tolerance could not be met (exit 4).
    Tolerance(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Verification(_) => 3,
            CliError::Tolerance(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Io(m) => write!(f, "I/O error: {m}"),
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Verification(m) => write!(f, "verification failed: {m}"),
            CliError::Tolerance(m) => write!(f, "numerical tolerance not met: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<pseudospline::Error> for CliError {
    fn from(err: pseudospline::Error) -> Self {
        use pseudospline::Error as E;
        let msg = err.to_string();
        match err {
            E::Tolerance(_) | E::NonFinite(_) | E::Consistency(_) => CliError::Tolerance(msg),
            E::ConditionViolated(_) => CliError::Verification(msg),
            _ => CliError::Config(msg),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
