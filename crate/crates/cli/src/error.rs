use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Invalid or inconsistent configuration, naming the offending field.
    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("numerical failure: {0}")]
    Numerical(opdmin_core::Error),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn config(field: &str, message: impl Into<String>) -> Self {
        CliError::Config { field: field.to_string(), message: message.into() }
    }

    /// Process exit status: 2 for configuration problems, 3 for numerical
    /// failures, 1 for anything environmental.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) | CliError::Csv(_) => 1,
        }
    }
}

impl From<opdmin_core::Error> for CliError {
    fn from(e: opdmin_core::Error) -> Self {
        use opdmin_core::Error as E;
        match e {
            E::Io(io) => CliError::Io(io),
            E::Parse { .. } | E::EmptyGraph => CliError::Config { field: "graph-path".into(), message: e.to_string() },
            E::InvalidArgument(msg) => CliError::Config { field: "experiment".into(), message: msg },
            other => CliError::Numerical(other),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
