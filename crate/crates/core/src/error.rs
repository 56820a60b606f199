use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    #[error("graph has {n} nodes; at least {min} are required")]
    Size { n: usize, min: usize },

    #[error("dataset error: {0}")]
    Dataset(String),

    #[error("malformed record at line {line}: {reason}")]
    Record { line: usize, reason: String },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("lambda {lambda} times spectral radius {radius} exceeds the overflow guard {guard}")]
    Range { lambda: f64, radius: f64, guard: f64 },

    #[error("eigenvalue {index} is {value:e}; Nystrom extension would divide by ~0")]
    DegenerateExtension { index: usize, value: f64 },

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            name,
            reason: reason.into(),
        }
    }
}
