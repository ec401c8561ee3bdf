use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("field has modes outside the required sector: {0}")]
    WrongSector(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration invalid:\n{}", .0.join("\n"))]
    Config(Vec<String>),

    #[error("numerical blow-up at t = {t}: {what}")]
    BlowUp { t: f64, what: String },

    #[error("frozen operator unstable at k = {k}: spectral abscissa {abscissa}")]
    UnstableFrozen { k: i64, abscissa: f64 },

    #[error("Lyapunov solve failed: {0}")]
    Lyapunov(String),

    #[error("Monte-Carlo did not reach tolerance: {0}")]
    Tolerance(String),

    #[error("checkpoint format: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("JSON: {0}")]
    Json(#[from] serde_json::Error),

    #[error("TOML: {0}")]
    Toml(#[from] toml::de::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
