use thiserror::Error;

use crate::subset::AgentSet;

#[derive(Debug, Error)]
pub enum Error {
    #[error("ground set of {n} agents exceeds the limit of {max} for this operation")]
    GroundSetTooLarge { n: usize, max: usize },

    #[error("valuation is not monotone: v({smaller}) > v({larger})")]
    NonMonotone { smaller: AgentSet, larger: AgentSet },

    #[error("operation unsupported for {0} valuations")]
    RepresentationUnsupported(&'static str),

    #[error("agent {agent} does not win at its submitted bid")]
    NotAWinner { agent: usize },

    #[error("precondition unmet: {0}")]
    PreconditionUnmet(String),

    #[error("no scenario is consistent with the conditioning event")]
    EmptyConditionalSupport,

    #[error("invalid valuation: {0}")]
    InvalidValuation(String),

    #[error("schema error in field `{field}`{}: {message}", line.map(|l| format!(" (line {l})")).unwrap_or_default())]
    Schema {
        field: String,
        line: Option<usize>,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Fails with [`Error::GroundSetTooLarge`] when `n > max`.
pub(crate) fn ensure_size(n: usize, max: usize) -> Result<()> {
    if n > max {
        Err(Error::GroundSetTooLarge { n, max })
    } else {
        Ok(())
    }
}
