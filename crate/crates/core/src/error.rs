use thiserror::Error;

/// Errors raised by the laboratory.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("pole: {0}")]
    Pole(String),
    #[error("divergent series: {0}")]
    Divergence(String),
    #[error("singular point: {0}")]
    Singularity(String),
    #[error("product collision: {0}")]
    Collision(String),
    #[error("budget exceeded: {0}")]
    Budget(String),
    #[error("quadrature under-resolved: {0}")]
    Quadrature(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for LabError {
    fn from(e: std::io::Error) -> Self {
        LabError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, LabError>;
