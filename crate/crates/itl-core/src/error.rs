use thiserror::Error;

/// Errors produced by network loading, preparation, and solving.
#[derive(Debug, Error)]
pub enum ItlError {
    #[error("parse error in {file} at row {row}, column '{column}': {message}")]
    Parse {
        file: String,
        row: usize,
        column: String,
        message: String,
    },

    #[error("network validation failed:\n{0}")]
    Validation(String),

    #[error("connected component {{{component}}} has no located bus; cannot infer locations")]
    UnresolvableLocation { component: String },

    #[error("cannot impute {field} for {element}: no donor element available")]
    Imputation { element: String, field: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("network is not connected: {0}")]
    Connectivity(String),

    #[error("interface {interface} is not covered by the supplied PTDF matrix")]
    InterfaceMismatch { interface: String },

    #[error("LP solver failure: {0}")]
    Solver(String),

    #[error("unknown element id '{0}'")]
    UnknownElement(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, ItlError>;
