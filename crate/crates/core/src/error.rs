use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("model is recurrent (d = {d}, alpha = {alpha}); a Green function needs d > alpha")]
    Recurrent { d: usize, alpha: f64 },

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("lattice coordinate overflow")]
    Overflow,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures that the CLI reports with the numeric/resource exit
    /// code rather than as a usage problem.
    pub fn is_numeric_or_resource(&self) -> bool {
        matches!(
            self,
            Error::Numeric(_) | Error::Resource(_) | Error::Overflow | Error::Recurrent { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
