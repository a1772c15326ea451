use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] simflow_core::Error),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    /// Some parts of a run failed; the report holds the rest.
    #[error("{0}")]
    Partial(String),
}

/// Process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Ok = 0,
    Validation = 2,
    Runtime = 3,
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable tag for reports.
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Io { .. } => "io",
            CliError::Format { .. } => "format",
            CliError::Partial(_) => "partial",
            CliError::Core(e) => match e.root() {
                simflow_core::Error::Capability { .. } => "capability",
                simflow_core::Error::Domain(_) => "domain",
                simflow_core::Error::InvalidArgument(_) => "invalid_argument",
                simflow_core::Error::Budget { .. } => "budget",
                simflow_core::Error::Initialization(_) => "initialization",
                simflow_core::Error::UndefinedStatistic(_) => "undefined_statistic",
                simflow_core::Error::ZeroEvidence => "zero_evidence",
                simflow_core::Error::AtSimulation { .. } => unreachable!("root strips wrapping"),
            },
        }
    }
}
