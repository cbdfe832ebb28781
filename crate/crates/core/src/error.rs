use thiserror::Error;

use crate::id::ElementId;
use crate::query::QueryError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised by the kernel.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("element {0} not found")]
    NotFound(ElementId),
    #[error("no child named `{name}` under {parent}")]
    NoSuchChild { parent: ElementId, name: String },
    #[error("name `{name}` is ambiguous under {parent} ({} candidates)", candidates.len())]
    Ambiguous {
        parent: ElementId,
        name: String,
        candidates: Vec<ElementId>,
    },
    #[error("{id} is a {actual}, expected {expected}")]
    WrongKind {
        id: ElementId,
        expected: &'static str,
        actual: &'static str,
    },
    #[error("name clash: `{0}` already exists")]
    NameClash(String),
    #[error("invalid name `{0}`")]
    InvalidName(String),
    #[error("class `{0}` is not instantiable")]
    NotInstantiable(String),
    #[error("type error: {0}")]
    Type(String),
    #[error("multiplicity violation: {0}")]
    Multiplicity(String),
    #[error("invalid class hierarchy: {0}")]
    Hierarchy(String),
    #[error("invalid layout: {0}")]
    Layout(String),
    #[error("state keys must be non-empty")]
    EmptyStateKey,
    #[error("nothing to {0}")]
    EmptyStack(&'static str),
    #[error("co-evolution rejected: {0}")]
    CoEvolution(String),
    #[error("transaction does not apply: {0}")]
    Conflict(String),
    #[error(transparent)]
    Query(#[from] QueryError),
    #[error("cascade diverged at depth {depth} involving {}", fmt_ids(elements))]
    CascadeDivergence { depth: u32, elements: Vec<ElementId> },
    #[error("view `{view}`: {message}")]
    View { view: String, message: String },
    #[error("parameter `{name}`: {message}")]
    Parameter { name: String, message: String },
    #[error("unknown project `{0}`")]
    UnknownProject(String),
    #[error("i/o: {0}")]
    Io(String),
    #[error("serialization: {0}")]
    Serialization(String),
    #[error("{0}")]
    Invalid(String),
}

fn fmt_ids(ids: &[ElementId]) -> String {
    ids.iter().map(|id| id.to_string()).collect::<Vec<_>>().join(", ")
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}
