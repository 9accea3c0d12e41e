use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch for {what}: expected {expected}, got {got}")]
    ShapeMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("network architectures do not match")]
    ArchitectureMismatch,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("non-finite gradient in layer {layer}")]
    NonFiniteGradient { layer: usize },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("episode is already terminal")]
    EpisodeTerminal,

    #[error("search budget exceeded: {0}")]
    SearchBudget(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("runs are not comparable: {0}")]
    RunMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),

    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for errors that stem from a bad run configuration rather than a
    /// failure at runtime. The CLI maps these to a distinct exit code.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::RunMismatch(_))
    }
}
