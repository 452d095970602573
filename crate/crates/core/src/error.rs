use thiserror::Error;

/// Errors raised by the engines, bidder models and harness.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A caller broke a sequencing or shape contract (out-of-order update,
    /// double pricing, off-grid input where a grid value is required, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// A configuration is internally inconsistent or infeasible.
    #[error("configuration error: {0}")]
    Config(String),

    /// A bid function was handed records belonging to another bidder.
    #[error("information leak: {0}")]
    InformationLeak(String),

    /// The requested computation exceeds the supported scale.
    #[error("scale exceeded: {0}")]
    Scale(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn contract(msg: impl Into<String>) -> Error {
    Error::Contract(msg.into())
}

pub(crate) fn config(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}
