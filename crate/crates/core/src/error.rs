use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid topology: {0}")]
    Topology(String),

    #[error("agent id {id} out of range (n = {n})")]
    AgentOutOfRange { id: usize, n: usize },

    #[error("item id {id} out of range ({count} items)")]
    ItemOutOfRange { id: usize, count: usize },

    /// A parameter outside its domain. `name` is the config key it came from.
    #[error("invalid value for {name}: {reason}")]
    Domain { name: &'static str, reason: String },

    #[error("undefined statistic: {0}")]
    Undefined(&'static str),
}

impl Error {
    pub(crate) fn domain(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Domain {
            name,
            reason: reason.into(),
        }
    }
}
