use crate::prelude::*;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// The model or approximator lacks something the operation needs.
    #[error("{subject} does not support {capability}")]
    Capability { subject: String, capability: &'static str },

    #[error("parameter outside the model domain: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Rejection ABC ran out of proposals before collecting enough draws.
    #[error(
        "proposal budget exhausted: {accepted} of {requested} draws accepted after {proposals} proposals (acceptance rate {acceptance_rate:.3e})"
    )]
    Budget {
        accepted: usize,
        requested: usize,
        proposals: usize,
        acceptance_rate: f64,
    },

    #[error("sampler initialization failed: {0}")]
    Initialization(String),

    #[error("statistic {0} is undefined on the simulated data")]
    UndefinedStatistic(String),

    #[error("all marginal likelihood estimates are zero")]
    ZeroEvidence,

    /// A failure inside an outer simulation loop, tagged with its index.
    #[error("simulation {index}: {source}")]
    AtSimulation { index: usize, source: Box<Error> },
}

impl Error {
    pub(crate) fn capability(subject: &str, capability: &'static str) -> Self {
        Error::Capability {
            subject: subject.to_string(),
            capability,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn at(self, index: usize) -> Self {
        match self {
            e @ Error::AtSimulation { .. } => e,
            other => Error::AtSimulation {
                index,
                source: Box::new(other),
            },
        }
    }

    /// Strips any simulation-index wrapping.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtSimulation { source, .. } => source.root(),
            other => other,
        }
    }
}
