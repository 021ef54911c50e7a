//! Concept taxonomy (TBox) and fact store (ABox).
//!
//! Reasoning is deliberately small: reflexive-transitive subsumption,
//! inherited disjointness and cardinality restrictions counted over
//! explicitly asserted property values. Anything beyond that is done by
//! explicit rules in [`crate::rules`].

mod consistency;
mod facts;
mod graph;
mod text;

use std::fmt;

pub use consistency::{check_consistency, Violation, ViolationKind};
pub use facts::{Assertion, FactStore, Value};
pub use graph::{Bound, ConceptGraph, ConceptGraphBuilder, PropertyKind, Restriction};
pub use text::{load_ontology, quote_literal, OntologyLoader};

pub(crate) use text::{is_identifier, scan_literal};

/// Where a declaration came from: source name and 1-based line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Origin {
    pub source: String,
    pub line: usize,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.source, self.line)
    }
}

fn at(origin: &Option<Origin>) -> String {
    origin.as_ref().map(|o| format!(" at {o}")).unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OntologyError {
    #[error("{origin}: {message}")]
    Parse { origin: Origin, message: String },
    #[error("is-a cycle: {}", cycle.join(" -> "))]
    IsaCycle { cycle: Vec<String> },
    #[error("undeclared term {term}{}", at(origin))]
    UndeclaredTerm { term: String, origin: Option<Origin> },
    #[error("invalid disjointness between {a} and {b}: {reason}{}", at(origin))]
    InvalidDisjointness {
        a: String,
        b: String,
        reason: String,
        origin: Option<Origin>,
    },
    #[error("property {property} declared as both object and data property{}", at(origin))]
    ConflictingProperty { property: String, origin: Option<Origin> },
}
