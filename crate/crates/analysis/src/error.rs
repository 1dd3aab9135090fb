use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error(transparent)]
    Core(#[from] llwlc_core::Error),

    /// A per-edge or per-vertex solve failed.
    #[error("{element}: {source}")]
    Element {
        element: String,
        #[source]
        source: llwlc_core::Error,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, AnalysisError>;
