use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// The network document is not well-formed JSON or does not match the schema.
    #[error("network format error at line {line}, column {column}: {message}")]
    Format {
        line: usize,
        column: usize,
        message: String,
    },

    /// The network graph is malformed (unknown parent, cycle, wrong shape).
    #[error("structural error at node `{node}`: {reason}")]
    Structure { node: String, reason: String },

    /// A node's domain or conditional probability table is invalid.
    #[error("validation error at node `{node}`{}: {reason}", .row.map(|r| format!(", row {r}")).unwrap_or_default())]
    Validation {
        node: String,
        row: Option<usize>,
        reason: String,
    },

    /// Counter totals contradict each other, e.g. a joint count above its parent count.
    #[error("counter consistency error: joint count {joint} exceeds parent count {parent}")]
    Consistency { joint: u64, parent: u64 },

    #[error("invalid argument: {0}")]
    Argument(String),

    /// A configured size or enumeration limit would be exceeded.
    #[error("capacity exceeded: {0}")]
    Capacity(String),
}

impl Error {
    pub fn is_capacity(&self) -> bool {
        matches!(self, Error::Capacity(_))
    }

    pub(crate) fn validation(node: &str, row: Option<usize>, reason: impl Into<String>) -> Self {
        Error::Validation {
            node: node.to_string(),
            row,
            reason: reason.into(),
        }
    }

    pub(crate) fn structure(node: &str, reason: impl Into<String>) -> Self {
        Error::Structure {
            node: node.to_string(),
            reason: reason.into(),
        }
    }
}
