use thiserror::Error;

use crate::space::ElementId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid element id {0:?}: ids must be non-empty and contain no whitespace or ','")]
    InvalidId(String),

    #[error("duplicate element {0}")]
    DuplicateElement(ElementId),

    #[error("incidence ({from}, {to}) references an element that is not in the space")]
    DanglingIncidence { from: String, to: String },

    #[error("self-incidence ({0}, {0}) is not allowed")]
    SelfLoop(ElementId),

    #[error("incidence relation has a directed cycle through {}", join_ids(.cycle))]
    CyclicIncidence { cycle: Vec<ElementId> },

    #[error("unknown element {0:?}")]
    UnknownElement(String),

    #[error("space mismatch: expected {expected}, found {found}")]
    DomainMismatch { expected: String, found: String },

    #[error("maps have different codomains: {left} and {right}")]
    CodomainMismatch { left: String, right: String },

    #[error("map is not total: no image for {0}")]
    NotTotal(ElementId),

    #[error("element {0} is mapped more than once")]
    DuplicateMapping(ElementId),

    #[error("quotient creates a cycle among classes {}", join_ids(.classes))]
    QuotientCycle { classes: Vec<ElementId> },

    #[error("invalid partition: {0}")]
    Partition(String),

    #[error("{map} map is not continuous: ({}, {}) is in the incidence but ({}, {}) is not in the target preorder",
        .witness.from, .witness.to, .witness.image_from, .witness.image_to)]
    NotContinuous {
        map: String,
        witness: crate::maps::Witness,
    },

    #[error("space of {size} elements exceeds the size bound {bound}")]
    SizeBound { size: usize, bound: usize },

    #[error("rendered pair id {0} is not unique")]
    IdCollision(String),

    #[error("unresolved reference to {0}")]
    UnresolvedReference(String),

    #[error("parse error at {line}:{column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("name {0} is not bound")]
    Unbound(String),

    #[error("name {0} is already bound")]
    Rebound(String),

    #[error("{name} is not a {expected}")]
    WrongKind { name: String, expected: &'static str },

    #[error("line {line}: {source}")]
    Script {
        line: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, column: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            column,
            message: message.into(),
        }
    }
}

fn join_ids(ids: &[ElementId]) -> String {
    ids.iter()
        .map(ElementId::as_str)
        .collect::<Vec<_>>()
        .join(" -> ")
}
