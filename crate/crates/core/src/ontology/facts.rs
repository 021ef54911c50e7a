use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{quote_literal, ConceptGraph, OntologyError, PropertyKind};

/// A term in the fact space: a named individual or a plain literal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Value {
    Individual(String),
    Literal(String),
}

impl Value {
    pub fn as_str(&self) -> &str {
        match self {
            Value::Individual(s) | Value::Literal(s) => s,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Individual(s) => f.write_str(s),
            Value::Literal(s) => f.write_str(&quote_literal(s)),
        }
    }
}

/// One ABox statement.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Assertion {
    Concept {
        individual: String,
        concept: String,
    },
    Object {
        subject: String,
        property: String,
        object: String,
    },
    Data {
        subject: String,
        property: String,
        literal: String,
    },
}

impl Assertion {
    pub fn concept(individual: impl Into<String>, concept: impl Into<String>) -> Self {
        Assertion::Concept {
            individual: individual.into(),
            concept: concept.into(),
        }
    }

    pub fn object(subject: impl Into<String>, property: impl Into<String>, object: impl Into<String>) -> Self {
        Assertion::Object {
            subject: subject.into(),
            property: property.into(),
            object: object.into(),
        }
    }

    pub fn data(subject: impl Into<String>, property: impl Into<String>, literal: impl Into<String>) -> Self {
        Assertion::Data {
            subject: subject.into(),
            property: property.into(),
            literal: literal.into(),
        }
    }

    pub fn subject(&self) -> &str {
        match self {
            Assertion::Concept { individual, .. } => individual,
            Assertion::Object { subject, .. } | Assertion::Data { subject, .. } => subject,
        }
    }

    /// The individuals this assertion mentions.
    pub fn individuals(&self) -> Vec<&str> {
        match self {
            Assertion::Concept { individual, .. } => vec![individual],
            Assertion::Object { subject, object, .. } => vec![subject, object],
            Assertion::Data { subject, .. } => vec![subject],
        }
    }

    /// Checks that the vocabulary is declared with the right kind.
    pub fn check(&self, graph: &ConceptGraph) -> Result<(), OntologyError> {
        let undeclared = |term: &str| OntologyError::UndeclaredTerm {
            term: term.to_string(),
            origin: None,
        };
        match self {
            Assertion::Concept { concept, .. } => {
                if !graph.has_concept(concept) {
                    return Err(undeclared(concept));
                }
            }
            Assertion::Object { property, .. } => {
                if graph.property_kind(property) != Some(PropertyKind::Object) {
                    return Err(undeclared(property));
                }
            }
            Assertion::Data { property, .. } => {
                if graph.property_kind(property) != Some(PropertyKind::Data) {
                    return Err(undeclared(property));
                }
            }
        }
        Ok(())
    }
}

impl fmt::Display for Assertion {
    /// The ONTO-TXT line for this assertion.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Assertion::Concept { individual, concept } => write!(f, "ind {individual} {concept}"),
            Assertion::Object {
                subject,
                property,
                object,
            } => write!(f, "rel {subject} {property} {object}"),
            Assertion::Data {
                subject,
                property,
                literal,
            } => {
                write!(f, "data {subject} {property} {}", quote_literal(literal))
            }
        }
    }
}

/// The assertional box. Set semantics throughout: inserting an assertion
/// twice is the same as inserting it once.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FactStore {
    individuals: BTreeSet<String>,
    assertions: BTreeSet<Assertion>,
}

impl FactStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Validated insert. Returns whether the assertion was new.
    pub fn assert_fact(&mut self, graph: &ConceptGraph, assertion: Assertion) -> Result<bool, OntologyError> {
        assertion.check(graph)?;
        Ok(self.insert(assertion))
    }

    /// Insert without vocabulary checks; [`super::check_consistency`] reports
    /// anything undeclared.
    pub fn insert(&mut self, assertion: Assertion) -> bool {
        for i in assertion.individuals() {
            if !self.individuals.contains(i) {
                self.individuals.insert(i.to_string());
            }
        }
        self.assertions.insert(assertion)
    }

    pub fn add_individual(&mut self, name: impl Into<String>) {
        self.individuals.insert(name.into());
    }

    pub fn contains(&self, assertion: &Assertion) -> bool {
        self.assertions.contains(assertion)
    }

    pub fn len(&self) -> usize {
        self.assertions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assertions.is_empty()
    }

    pub fn individuals(&self) -> impl Iterator<Item = &str> {
        self.individuals.iter().map(String::as_str)
    }

    pub fn has_individual(&self, name: &str) -> bool {
        self.individuals.contains(name)
    }

    pub fn assertions(&self) -> impl Iterator<Item = &Assertion> {
        self.assertions.iter()
    }

    /// Concepts `individual` is directly asserted into.
    pub fn asserted_concepts<'a>(&'a self, individual: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.about(individual).filter_map(|a| match a {
            Assertion::Concept { concept, .. } => Some(concept.as_str()),
            _ => None,
        })
    }

    /// Every assertion whose subject is `individual`.
    pub fn about<'a>(&'a self, individual: &'a str) -> impl Iterator<Item = &'a Assertion> + 'a {
        let start = Assertion::concept(individual, "");
        self.assertions
            .range(start..)
            .take_while(move |a| matches!(a, Assertion::Concept { individual: i, .. } if i == individual))
            .chain(
                self.assertions
                    .iter()
                    .filter(move |a| !matches!(a, Assertion::Concept { .. }) && a.subject() == individual),
            )
    }

    /// Objects of `subject property ?` (individuals and literals alike).
    pub fn values_of<'a>(&'a self, subject: &'a str, property: &'a str) -> impl Iterator<Item = Value> + 'a {
        self.assertions.iter().filter_map(move |a| match a {
            Assertion::Object {
                subject: s,
                property: p,
                object,
            } if s == subject && p == property => Some(Value::Individual(object.clone())),
            Assertion::Data {
                subject: s,
                property: p,
                literal,
            } if s == subject && p == property => Some(Value::Literal(literal.clone())),
            _ => None,
        })
    }

    /// Every individual asserted into `concept` or one of its descendants.
    pub fn instances_of(&self, graph: &ConceptGraph, concept: &str) -> Result<BTreeSet<String>, OntologyError> {
        if !graph.has_concept(concept) {
            return Err(OntologyError::UndeclaredTerm {
                term: concept.to_string(),
                origin: None,
            });
        }
        let below = graph.descendants(concept);
        Ok(self
            .assertions
            .iter()
            .filter_map(|a| match a {
                Assertion::Concept { individual, concept: c } if below.contains(c) => Some(individual.clone()),
                _ => None,
            })
            .collect())
    }

    pub fn extend(&mut self, other: &FactStore) {
        for i in &other.individuals {
            self.individuals.insert(i.clone());
        }
        for a in &other.assertions {
            self.assertions.insert(a.clone());
        }
    }

    /// ONTO-TXT rendering of every assertion, sorted.
    pub fn to_onto_text(&self) -> String {
        let mut out = String::new();
        for a in &self.assertions {
            out.push_str(&a.to_string());
            out.push('\n');
        }
        out
    }
}

impl FromIterator<Assertion> for FactStore {
    fn from_iter<T: IntoIterator<Item = Assertion>>(iter: T) -> Self {
        let mut store = FactStore::new();
        for a in iter {
            store.insert(a);
        }
        store
    }
}
