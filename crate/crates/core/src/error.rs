use thiserror::Error;

pub type Result<T> = std::result::Result<T, KgError>;

#[derive(Debug, Error)]
pub enum KgError {
    #[error("unknown {kind} `{id}`")]
    NotFound { kind: &'static str, id: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("graph too large for exhaustive search: {nodes} nodes (limit {limit})")]
    TooLarge { nodes: usize, limit: usize },

    #[error("transport failure after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },

    #[error("generation failed after {attempts} attempt(s): {message}")]
    Generation { attempts: u32, message: String },

    #[error("service returned an empty answer")]
    EmptyAnswer,

    #[error("template error: {0}")]
    Template(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl KgError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        KgError::InvalidArgument(msg.into())
    }

    pub(crate) fn entity(id: &str) -> Self {
        KgError::NotFound {
            kind: "entity",
            id: id.to_string(),
        }
    }

    pub(crate) fn relation(id: &str) -> Self {
        KgError::NotFound {
            kind: "relation",
            id: id.to_string(),
        }
    }

    /// True for failures caused by talking to a remote service.
    pub fn is_transport(&self) -> bool {
        matches!(self, KgError::Transport { .. } | KgError::Generation { .. })
    }
}
