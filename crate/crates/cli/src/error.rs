use std::fmt;

/// Failure of a subcommand, carrying the process exit code it maps to.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config keys or values. Exit code 1.
    Usage(String),
    /// Missing, unreadable or malformed input. Exit code 2.
    Data(String),
    /// Training divergence or a failed gradient check. Exit code 3.
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Data(_) => "data",
            CliError::Numerical(_) => "numerical",
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msg = match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Numerical(m) => m,
        };
        write!(f, "halu: error[{}]: {msg}", self.tag())
    }
}

impl From<halu_core::Error> for CliError {
    fn from(e: halu_core::Error) -> Self {
        use halu_core::Error as E;
        match e {
            E::InvalidConfig(_) => CliError::Usage(e.to_string()),
            E::Numerical { .. } => CliError::Numerical(e.to_string()),
            E::Shape { .. } | E::Domain(_) | E::Io { .. } | E::Format { .. } => {
                CliError::Data(e.to_string())
            }
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
