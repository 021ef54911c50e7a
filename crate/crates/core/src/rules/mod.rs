//! Safe Horn rules over the fact store.
//!
//! RULE-TXT v1:
//!
//! ```text
//! # comment
//! rule evidence_of_software:
//!     RPCGroupObject(?x) & hasCommonKey(?x, ?y) & belongsToSoftware(?y, ?soft)
//!     => isEvidenceOfSoftware(?x, ?soft)
//! ```
//!
//! A rule runs from `rule` to the next `rule` line. One-argument atoms are
//! concept atoms, two-argument atoms are property atoms (object or data
//! according to the property's declaration) and `builtin:name(a, b)` calls
//! one of the path and state tests. Terms are `?variables`, `"literals"` or
//! bare individual names.

mod classify;
mod engine;
mod parse;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ontology::{quote_literal, OntologyError};

pub use classify::{classify_activity, Classification, Comparison, GroupIndividuals, ACTIVITY_CONCEPTS};
pub use engine::{infer, infer_with, replay, solutions, Binding, InferenceResult, Provenance, DEFAULT_MAX_ITERATIONS};
pub use parse::parse_rules;

pub const SHIPPED_RULES: &str = include_str!("../../data/rpcompare.rules");

/// The rule set shipped with the knowledge base.
pub fn shipped_rules() -> Vec<Rule> {
    parse_rules(SHIPPED_RULES.as_bytes()).expect("shipped rules are valid")
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Term {
    Var(String),
    Literal(String),
    Individual(String),
}

impl Term {
    pub fn var(name: impl Into<String>) -> Self {
        Term::Var(name.into())
    }

    pub fn as_var(&self) -> Option<&str> {
        match self {
            Term::Var(v) => Some(v),
            _ => None,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "?{v}"),
            Term::Literal(l) => f.write_str(&quote_literal(l)),
            Term::Individual(i) => f.write_str(i),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Builtin {
    /// First path is a (non-strict) prefix of the second.
    PathPrefixOf,
    /// First path sits exactly one level below the second.
    DirectChildOf,
    PathEquals,
    StateEquals,
}

impl Builtin {
    pub const ALL: [Builtin; 4] = [
        Builtin::PathPrefixOf,
        Builtin::DirectChildOf,
        Builtin::PathEquals,
        Builtin::StateEquals,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Builtin::PathPrefixOf => "pathPrefixOf",
            Builtin::DirectChildOf => "directChildOf",
            Builtin::PathEquals => "pathEquals",
            Builtin::StateEquals => "stateEquals",
        }
    }

    pub fn arity(self) -> usize {
        2
    }

    /// Paths are compared segment-wise and case-insensitively with root
    /// aliases ignored; text that is not a path never matches.
    pub fn eval(self, args: &[&str]) -> bool {
        use crate::snapshot::RegistryPath;
        let [a, b] = args else {
            return false;
        };
        if self == Builtin::StateEquals {
            return a == b;
        }
        let (Ok(a), Ok(b)) = (RegistryPath::parse(a), RegistryPath::parse(b)) else {
            return false;
        };
        match self {
            Builtin::PathPrefixOf => a.is_prefix_of(&b),
            Builtin::DirectChildOf => a.is_direct_child_of(&b),
            Builtin::PathEquals => a.same_key_as(&b),
            Builtin::StateEquals => unreachable!(),
        }
    }
}

impl FromStr for Builtin {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Builtin::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| s.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Atom {
    Concept {
        concept: String,
        term: Term,
    },
    Property {
        property: String,
        subject: Term,
        object: Term,
    },
    Builtin {
        builtin: Builtin,
        args: Vec<Term>,
    },
}

impl Atom {
    pub fn terms(&self) -> Vec<&Term> {
        match self {
            Atom::Concept { term, .. } => vec![term],
            Atom::Property { subject, object, .. } => vec![subject, object],
            Atom::Builtin { args, .. } => args.iter().collect(),
        }
    }

    pub fn vars(&self) -> impl Iterator<Item = &str> {
        self.terms().into_iter().filter_map(Term::as_var)
    }

    pub fn is_builtin(&self) -> bool {
        matches!(self, Atom::Builtin { .. })
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Concept { concept, term } => write!(f, "{concept}({term})"),
            Atom::Property {
                property,
                subject,
                object,
            } => write!(f, "{property}({subject}, {object})"),
            Atom::Builtin { builtin, args } => {
                write!(f, "builtin:{}(", builtin.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rule {
    pub name: String,
    pub body: Vec<Atom>,
    pub head: Vec<Atom>,
}

impl Rule {
    /// Checks that head atoms are not builtins and that every head or
    /// builtin variable is bound by a concept or property atom of the body.
    pub fn check_safety(&self) -> Result<(), RuleError> {
        if self.head.iter().any(Atom::is_builtin) {
            return Err(RuleError::BuiltinInHead {
                rule: self.name.clone(),
            });
        }
        let bound: BTreeSet<&str> = self
            .body
            .iter()
            .filter(|a| !a.is_builtin())
            .flat_map(Atom::vars)
            .collect();
        let needed = self
            .head
            .iter()
            .chain(self.body.iter().filter(|a| a.is_builtin()))
            .flat_map(Atom::vars);
        for v in needed {
            if !bound.contains(v) {
                return Err(RuleError::UnsafeRule {
                    rule: self.name.clone(),
                    variable: v.to_string(),
                });
            }
        }
        Ok(())
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |atoms: &[Atom]| atoms.iter().map(Atom::to_string).collect::<Vec<_>>().join(" & ");
        write!(f, "rule {}: {} => {}", self.name, join(&self.body), join(&self.head))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RuleError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("rule {rule}: variable ?{variable} is not bound by the body")]
    UnsafeRule { rule: String, variable: String },
    #[error("rule {rule}: unknown builtin {name}")]
    UnknownBuiltin { rule: String, name: String },
    #[error("rule {rule}: builtins may not appear in the head")]
    BuiltinInHead { rule: String },
    #[error("rule {0} is defined twice")]
    DuplicateRule(String),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum InferError {
    #[error("rule {rule}: {source}")]
    UndeclaredTerm { rule: String, source: Box<OntologyError> },
    #[error("rule {rule}: {message}")]
    IllTyped { rule: String, message: String },
    #[error("no fixpoint after {0} passes")]
    IterationLimitExceeded(usize),
}
