use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("angle {0}° is outside [-90°, 90°)")]
    AngleOutOfRange(f64),

    #[error("invalid array geometry: {0}")]
    Geometry(String),

    #[error("invalid source configuration: {0}")]
    Sources(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("error covariance is numerically singular: {0}")]
    SingularCovariance(String),

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures caused by bad user input rather than numerics.
    pub fn is_config(&self) -> bool {
        !matches!(self, Error::Numeric(_) | Error::SingularCovariance(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
