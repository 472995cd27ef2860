use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("manifest parse error at line {line}: {message}")]
    ManifestParse { line: usize, message: String },

    #[error("manifest error: {0}")]
    Manifest(String),

    #[error("split error: {0}")]
    Split(String),

    #[error("signal error: {0}")]
    Signal(String),

    #[error("feature error: {0}")]
    Feature(String),

    #[error("model error: {0}")]
    Model(String),

    /// A metric that has no defined value on the given inputs, e.g. AUROC
    /// with single-class labels. Callers decide whether to skip or fail.
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("evaluation error: {0}")]
    Eval(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
