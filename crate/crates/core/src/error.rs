use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An input violated an operation's precondition.
    #[error("domain error: {0}")]
    Domain(String),

    /// The angle scan found no pair of chirp peaks standing out from the background.
    #[error("training sequence not found: {0}")]
    TsNotFound(String),

    /// The two peak angles give a (near-)singular offset system.
    #[error("degenerate peak geometry: |det| = {det:.3e}")]
    DegenerateGeometry { det: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
