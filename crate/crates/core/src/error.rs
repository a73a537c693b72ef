use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("dimension {0} outside supported range 1..=16")]
    Dimension(usize),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("reference vector has non-finite coordinates")]
    NonFiniteReference,

    #[error("reference norm {norm} lies inside the clamping region (validity radius {radius})")]
    ClampRegion { norm: f64, radius: f64 },

    #[error("runs have mismatched lengths ({0} vs {1} steps)")]
    MismatchedRuns(u64, u64),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("checkpoint n={0} has a zero-norm position")]
    ZeroNorm(u64),

    #[error("config error{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Config {
        line: Option<usize>,
        message: String,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl CoreError {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        CoreError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn config(line: Option<usize>, message: impl Into<String>) -> Self {
        CoreError::Config {
            line,
            message: message.into(),
        }
    }

    /// Whether this is a configuration/validation failure as opposed to a runtime one.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            CoreError::Config { .. }
                | CoreError::InvalidParameter { .. }
                | CoreError::Dimension(_)
        )
    }
}

pub type Result<T, E = CoreError> = std::result::Result<T, E>;
