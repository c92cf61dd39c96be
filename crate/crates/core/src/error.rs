use thiserror::Error;

/// Errors produced by the blockage model and its tooling.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum BlockageError {
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid distribution table: {0}")]
    InvalidTable(String),

    #[error("numerical failure in {stage} after {iterations} iterations (last change {last_change:.3e})")]
    NumericalFailure {
        stage: &'static str,
        iterations: usize,
        last_change: f64,
    },

    #[error("zone-entry intensity is zero: the link is never blocked")]
    NeverBlocked,

    #[error("config error at `{path}`: {reason}")]
    Config { path: String, reason: String },

    #[error("target rate {target:.4e} b/s is not achievable at the minimum radius {radius} m")]
    Infeasible { target: f64, radius: f64 },
}

impl BlockageError {
    /// Prefixes the parameter name of an [`InvalidParameter`](Self::InvalidParameter)
    /// with a config section, turning it into a [`Config`](Self::Config) error.
    pub fn in_section(self, section: &str) -> Self {
        match self {
            BlockageError::InvalidParameter { name, reason } => BlockageError::Config {
                path: format!("{section}.{name}"),
                reason,
            },
            other => other,
        }
    }

    pub(crate) fn param(name: &str, reason: impl Into<String>) -> Self {
        BlockageError::InvalidParameter {
            name: name.to_string(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, BlockageError>;
