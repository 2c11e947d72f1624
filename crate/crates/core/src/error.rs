use thiserror::Error;

pub type Result<T> = std::result::Result<T, ClusterError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClusterError {
    /// Non-finite values or otherwise malformed numeric input.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// One or more clusters have no members (singular `Z Zᵀ`) or zero total weight.
    #[error("empty cluster(s): {clusters:?}")]
    EmptyCluster { clusters: Vec<usize> },

    /// The membership Gram matrix `U^(m) W U^(m)ᵀ` is singular or the solve
    /// produced non-finite centroids.
    #[error("degenerate memberships: cluster {cluster} carries no usable weight")]
    DegenerateMembership { cluster: usize },

    /// The data cannot support the request, e.g. fewer distinct samples than clusters.
    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("instance too large: {0}")]
    Capacity(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("io error: {0}")]
    Io(String),
}

impl ClusterError {
    /// True for errors caused by the caller's configuration rather than the data.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            ClusterError::InvalidConfig(_) | ClusterError::Capacity(_)
        )
    }
}

impl From<std::io::Error> for ClusterError {
    fn from(e: std::io::Error) -> Self {
        ClusterError::Io(e.to_string())
    }
}
